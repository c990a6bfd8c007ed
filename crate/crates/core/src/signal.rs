//! Uniformly sampled signals, synthesis, spectra and segmentation.
//!
//! Energies follow one convention throughout the crate: the discrete energy
//! of a trace `v` dissipated in a load `R` is `Σ v[n]² / (R·fs)`, i.e. the
//! left Riemann sum of `∫ v(t)²/R dt`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::{round_count, Scalar};

/// Physical unit carried by a [`TimeSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    /// Acceleration normalised to standard gravity.
    AccelerationG,
    Volts,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::AccelerationG => "acceleration_g",
            Unit::Volts => "volts",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<S> {
    samples: Vec<S>,
    fs: S,
    unit: Unit,
}

impl<S: Scalar> TimeSeries<S> {
    /// Wraps `samples` taken at `fs` Hz. Rejects non-positive or non-finite rates.
    pub fn new(samples: Vec<S>, fs: S, unit: Unit) -> Result<Self> {
        if !(fs.is_finite() && fs > S::zero()) {
            return Err(Error::invalid(format!("sampling rate must be positive, got {fs}")));
        }
        Ok(Self { samples, fs, unit })
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<S> {
        self.samples
    }

    pub fn fs(&self) -> S {
        self.fs
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `len / fs` in seconds.
    pub fn duration(&self) -> S {
        S::from_usize_lossy(self.samples.len()) / self.fs
    }

    pub fn nyquist(&self) -> S {
        self.fs / S::lit(2.0)
    }

    /// Discrete energy `Σ x²/(R·fs)`.
    pub fn energy(&self, r_ohm: S) -> S {
        sum_squares(&self.samples) / (r_ohm * self.fs)
    }

    pub fn rms(&self) -> S {
        if self.samples.is_empty() {
            return S::zero();
        }
        (sum_squares(&self.samples) / S::from_usize_lossy(self.samples.len())).sqrt()
    }

    /// Same samples with a different unit tag.
    pub fn relabel(self, unit: Unit) -> Self {
        Self { unit, ..self }
    }

    pub(crate) fn with_samples(&self, samples: Vec<S>, unit: Unit) -> Self {
        Self { samples, fs: self.fs, unit }
    }
}

pub(crate) fn sum_squares<S: Scalar>(xs: &[S]) -> S {
    xs.iter().fold(S::zero(), |acc, &x| acc + x * x)
}

/// One-sided magnitude spectrum, DC bin first.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<S> {
    /// `|X[k]|` for `k = 0..=N/2`.
    pub magnitudes: Vec<S>,
    /// Bin spacing `fs/N` in Hz.
    pub df: S,
    pub fs_origin: S,
    /// Transform length `N`.
    pub n: usize,
}

impl<S: Scalar> Spectrum<S> {
    pub fn bin_frequency(&self, k: usize) -> S {
        S::from_usize_lossy(k) * self.df
    }

    /// Index of the largest magnitude in `[f_lo, f_hi]`.
    pub fn peak_bin_in(&self, f_lo: S, f_hi: S) -> Option<usize> {
        self.magnitudes
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let f = self.bin_frequency(*k);
                f >= f_lo && f <= f_hi
            })
            .fold(None, |best: Option<(usize, S)>, (k, &m)| match best {
                Some((_, bm)) if bm >= m => best,
                _ => Some((k, m)),
            })
            .map(|(k, _)| k)
    }

    /// Nearest bin to `f`.
    pub fn bin_of(&self, f: S) -> usize {
        round_count(f / self.df).min(self.magnitudes.len().saturating_sub(1))
    }

    /// Energy represented by the bins whose centre lies in `[f_lo, f_hi]`,
    /// in units of `Σ x²` (Parseval, one-sided folding).
    pub fn band_sum_squares(&self, f_lo: S, f_hi: S) -> S {
        let n = self.n;
        let mut acc = S::zero();
        for (k, &m) in self.magnitudes.iter().enumerate() {
            let f = self.bin_frequency(k);
            if f < f_lo || f > f_hi {
                continue;
            }
            // DC and (for even N) Nyquist appear once in the two-sided spectrum
            let fold = if k == 0 || (n.is_multiple_of(2) && k == n / 2) { S::one() } else { S::lit(2.0) };
            acc += fold * m * m;
        }
        acc / S::from_usize_lossy(n)
    }

    /// `(1/N)·Σ_k |X[k]|²` over the full two-sided spectrum.
    pub fn total_sum_squares(&self) -> S {
        self.band_sum_squares(S::zero(), self.fs_origin)
    }
}

fn check_rate_and_duration<S: Scalar>(fs: S, duration: S) -> Result<usize> {
    if !(fs.is_finite() && fs > S::zero()) {
        return Err(Error::invalid(format!("sampling rate must be positive, got {fs}")));
    }
    if !(duration.is_finite() && duration > S::zero()) {
        return Err(Error::invalid(format!("duration must be positive, got {duration}")));
    }
    Ok(round_count(duration * fs))
}

fn check_tone<S: Scalar>(f: S, fs: S) -> Result<()> {
    let nyquist = fs / S::lit(2.0);
    if !(f.is_finite() && f > S::zero()) {
        return Err(Error::invalid(format!("tone frequency must be positive, got {f}")));
    }
    if f >= nyquist {
        return Err(Error::Aliasing { freq: f.as_f64(), nyquist: nyquist.as_f64() });
    }
    Ok(())
}

#[inline]
fn tone_sample<S: Scalar>(f: S, amplitude: S, phase: S, fs: S, n: usize) -> S {
    amplitude * (S::TAU() * f * S::from_usize_lossy(n) / fs + phase).sin()
}

/// `amplitude·sin(2π f n/fs + phase)` for `round(duration·fs)` samples.
pub fn synth_sine<S: Scalar>(f: S, amplitude: S, phase: S, fs: S, duration: S) -> Result<TimeSeries<S>> {
    let len = check_rate_and_duration(fs, duration)?;
    check_tone(f, fs)?;
    let samples = (0..len).map(|n| tone_sample(f, amplitude, phase, fs, n)).collect();
    TimeSeries::new(samples, fs, Unit::AccelerationG)
}

/// A sinusoidal component with explicit phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone<S> {
    pub freq: S,
    pub amplitude: S,
    pub phase: S,
}

/// Sum of zero-phase tones `(Hz, amplitude)` plus seeded white Gaussian noise.
pub fn synth_composite<S: Scalar>(
    tones: &[(S, S)],
    noise_sigma: S,
    fs: S,
    duration: S,
    seed: u64,
) -> Result<TimeSeries<S>> {
    let tones: Vec<Tone<S>> = tones
        .iter()
        .map(|&(freq, amplitude)| Tone { freq, amplitude, phase: S::zero() })
        .collect();
    synth_tones(&tones, noise_sigma, fs, duration, seed)
}

/// Sum of phased tones plus seeded white Gaussian noise of standard deviation `noise_sigma`.
pub fn synth_tones<S: Scalar>(
    tones: &[Tone<S>],
    noise_sigma: S,
    fs: S,
    duration: S,
    seed: u64,
) -> Result<TimeSeries<S>> {
    let len = check_rate_and_duration(fs, duration)?;
    for t in tones {
        check_tone(t.freq, fs)?;
    }
    if !(noise_sigma.is_finite() && noise_sigma >= S::zero()) {
        return Err(Error::invalid(format!("noise sigma must be non-negative, got {noise_sigma}")));
    }
    let mut samples = vec![S::zero(); len];
    for t in tones {
        for (n, x) in samples.iter_mut().enumerate() {
            *x += tone_sample(t.freq, t.amplitude, t.phase, fs, n);
        }
    }
    if noise_sigma > S::zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for x in samples.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x += noise_sigma * S::lit(z);
        }
    }
    TimeSeries::new(samples, fs, Unit::AccelerationG)
}

/// Magnitude spectrum over the full series length (no padding, no window).
pub fn fft_magnitude<S: Scalar>(ts: &TimeSeries<S>) -> Result<Spectrum<S>> {
    if ts.is_empty() {
        return Err(Error::EmptyInput("spectrum of an empty series"));
    }
    let n = ts.len();
    let mut buf: Vec<Complex<S>> = ts.samples().iter().map(|&x| Complex::new(x, S::zero())).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let magnitudes = buf[..=n / 2].iter().map(|c| c.norm()).collect();
    Ok(Spectrum {
        magnitudes,
        df: ts.fs() / S::from_usize_lossy(n),
        fs_origin: ts.fs(),
        n,
    })
}

/// Conventional digital baseline: energy in `[f_lo, f_hi]` computed from the
/// spectrum, divided by `R`. Equals `Σ v²/(R·fs)` restricted to the band.
pub fn band_energy_digital<S: Scalar>(ts: &TimeSeries<S>, f_lo: S, f_hi: S, r_ohm: S) -> Result<S> {
    let nyquist = ts.nyquist();
    if !(f_lo >= S::zero() && f_lo < f_hi && f_hi <= nyquist) {
        return Err(Error::InvalidBand { lo: f_lo.as_f64(), hi: f_hi.as_f64(), fs: ts.fs().as_f64() });
    }
    if !(r_ohm.is_finite() && r_ohm > S::zero()) {
        return Err(Error::invalid(format!("load resistance must be positive, got {r_ohm}")));
    }
    let spectrum = fft_magnitude(ts)?;
    Ok(spectrum.band_sum_squares(f_lo, f_hi) / (r_ohm * ts.fs()))
}

/// `count` contiguous windows of `round(window·fs)` samples starting at t = 0.
pub fn segment<S: Scalar>(ts: &TimeSeries<S>, window: S, count: usize) -> Result<Vec<TimeSeries<S>>> {
    if !(window.is_finite() && window > S::zero()) {
        return Err(Error::invalid(format!("window must be positive, got {window}")));
    }
    if count == 0 {
        return Err(Error::invalid("segment count must be at least 1"));
    }
    let w = round_count(window * ts.fs());
    if w == 0 {
        return Err(Error::invalid(format!("window {window} s is shorter than one sample")));
    }
    let needed = w * count;
    if needed > ts.len() {
        return Err(Error::InsufficientDuration { needed, available: ts.len() });
    }
    Ok(ts.samples()[..needed]
        .chunks_exact(w)
        .map(|c| ts.with_samples(c.to_vec(), ts.unit()))
        .collect())
}
