//! Harvesters as resonant band-pass filters.
//!
//! Each design is modelled by the second-order band-pass
//!
//! ```text
//! H(s) = G · (s·ω0/Q) / (s² + s·ω0/Q + ω0²),   ω0 = 2π f0,  Q = f0 / bw3db
//! ```
//!
//! which peaks at exactly `G` volts per g at `f0`. Time-domain simulation uses
//! the bilinear transform prewarped at `f0`, so the discrete peak sits on the
//! same frequency with the same height.

use std::path::Path;

use rustfft::num_complex::Complex;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scalar::{round_count, Scalar};
use crate::signal::{synth_sine, TimeSeries, Unit};

/// Minimum `fs / f0` accepted by [`simulate_voltage`].
pub const MIN_OVERSAMPLING: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PehDesign<S> {
    pub name: String,
    pub thickness_mm: S,
    /// Resonance in Hz.
    pub f0: S,
    /// 3-dB bandwidth in Hz.
    pub bw3db: S,
    /// Gain at resonance, V/g.
    pub peak_gain: S,
    /// Load resistance in ohms.
    pub r_ohm: S,
}

impl<S: Scalar> PehDesign<S> {
    pub fn new(name: impl Into<String>, thickness_mm: S, f0: S, bw3db: S, peak_gain: S, r_ohm: S) -> Result<Self> {
        let d = Self { name: name.into(), thickness_mm, f0, bw3db, peak_gain, r_ohm };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: S| x.is_finite() && x > S::zero();
        if !ok(self.f0) {
            return Err(Error::invalid(format!("{}: f0 must be positive", self.name)));
        }
        if !(ok(self.bw3db) && self.bw3db < self.f0) {
            return Err(Error::invalid(format!("{}: bandwidth must lie in (0, f0)", self.name)));
        }
        if !ok(self.peak_gain) {
            return Err(Error::invalid(format!("{}: peak gain must be positive", self.name)));
        }
        if !ok(self.r_ohm) {
            return Err(Error::invalid(format!("{}: load resistance must be positive", self.name)));
        }
        Ok(())
    }

    /// Quality factor `f0 / bw3db`.
    pub fn q(&self) -> S {
        self.f0 / self.bw3db
    }

    pub fn omega0(&self) -> S {
        S::TAU() * self.f0
    }

    /// Copy with the peak gain multiplied by `factor`.
    pub fn scaled(&self, factor: S) -> Self {
        Self { peak_gain: self.peak_gain * factor, ..self.clone() }
    }

    /// Settling time constant of the envelope, `Q/(π f0) = 1/(π bw)`.
    pub fn time_constant(&self) -> S {
        S::one() / (S::PI() * self.bw3db)
    }
}

/// `|H(j2πf)|` in V/g; zero at DC.
pub fn frf_magnitude<S: Scalar>(design: &PehDesign<S>, f: S) -> S {
    if f <= S::zero() {
        return S::zero();
    }
    let detune = design.q() * (f / design.f0 - design.f0 / f);
    design.peak_gain / (S::one() + detune * detune).sqrt()
}

/// Harvester table indexed by PZT thickness.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignTable<S> {
    designs: Vec<PehDesign<S>>,
}

const THICKNESS_TOL_MM: f64 = 1e-6;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignRow {
    name: String,
    thickness_mm: f64,
    f0_hz: f64,
    #[serde(default = "default_bw")]
    bw3db_hz: f64,
    #[serde(default = "one")]
    peak_gain_v_per_g: f64,
    #[serde(default = "one")]
    r_ohm: f64,
}

fn default_bw() -> f64 {
    10.0
}
fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignFile {
    design: Vec<DesignRow>,
}

impl<S: Scalar> Default for DesignTable<S> {
    /// PZT 0.35–0.50 mm in 0.05 mm steps, resonances 125–200 Hz, 10 Hz bandwidth,
    /// unit gain into 1 Ω.
    fn default() -> Self {
        let rows = [(0.35, 125.0), (0.40, 150.0), (0.45, 175.0), (0.50, 200.0)];
        let designs = rows
            .iter()
            .map(|&(t, f0)| PehDesign {
                name: format!("pzt-{t:.2}mm"),
                thickness_mm: S::lit(t),
                f0: S::lit(f0),
                bw3db: S::lit(10.0),
                peak_gain: S::one(),
                r_ohm: S::one(),
            })
            .collect();
        Self { designs }
    }
}

impl<S: Scalar> DesignTable<S> {
    pub fn new(designs: Vec<PehDesign<S>>) -> Result<Self> {
        if designs.is_empty() {
            return Err(Error::invalid("design table is empty"));
        }
        for d in &designs {
            d.validate()?;
        }
        Ok(Self { designs })
    }

    /// Parses a table from TOML with one `[[design]]` entry per row
    /// (`name`, `thickness_mm`, `f0_hz`, `bw3db_hz`, `peak_gain_v_per_g`, `r_ohm`).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: DesignFile = toml::from_str(text).map_err(|e| Error::invalid(format!("design table: {e}")))?;
        let designs = file
            .design
            .into_iter()
            .map(|r| PehDesign {
                name: r.name,
                thickness_mm: S::lit(r.thickness_mm),
                f0: S::lit(r.f0_hz),
                bw3db: S::lit(r.bw3db_hz),
                peak_gain: S::lit(r.peak_gain_v_per_g),
                r_ohm: S::lit(r.r_ohm),
            })
            .collect();
        Self::new(designs)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::ConfigFile { path: path.into(), message: e.to_string() })
    }

    pub fn designs(&self) -> &[PehDesign<S>] {
        &self.designs
    }

    pub fn by_thickness(&self, thickness_mm: S) -> Result<&PehDesign<S>> {
        self.designs
            .iter()
            .find(|d| (d.thickness_mm - thickness_mm).abs() <= S::lit(THICKNESS_TOL_MM))
            .ok_or_else(|| Error::UnknownDesign(format!("{thickness_mm} mm")))
    }

    pub fn by_name(&self, name: &str) -> Result<&PehDesign<S>> {
        self.designs
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| Error::UnknownDesign(name.to_string()))
    }

    /// Looks a design up by name, or by thickness when `key` parses as a number.
    pub fn lookup(&self, key: &str) -> Result<&PehDesign<S>> {
        if let Ok(d) = self.by_name(key) {
            return Ok(d);
        }
        match key.trim().trim_end_matches("mm").parse::<f64>() {
            Ok(t) => self.by_thickness(S::lit(t)),
            Err(_) => Err(Error::UnknownDesign(key.to_string())),
        }
    }
}

/// Row of the default table for a PZT thickness in mm.
pub fn design_from_thickness<S: Scalar>(thickness_mm: S) -> Result<PehDesign<S>> {
    DesignTable::default().by_thickness(thickness_mm).cloned()
}

/// Second-order section in transposed direct form II.
///
/// `y = b0 x + s1;  s1 = b1 x - a1 y + s2;  s2 = b2 x - a2 y`
#[derive(Debug, Clone, PartialEq)]
pub struct Biquad<S> {
    pub b0: S,
    pub b1: S,
    pub b2: S,
    pub a1: S,
    pub a2: S,
    s1: S,
    s2: S,
}

impl<S: Scalar> Biquad<S> {
    pub fn from_coefficients(b0: S, b1: S, b2: S, a1: S, a2: S) -> Self {
        Self { b0, b1, b2, a1, a2, s1: S::zero(), s2: S::zero() }
    }

    /// Bilinear transform of the design's band-pass, prewarped at `f0`.
    pub fn bandpass(design: &PehDesign<S>, fs: S) -> Self {
        let two = S::lit(2.0);
        let w0 = design.omega0();
        let k = w0 / (w0 / (two * fs)).tan();
        let bw = w0 / design.q();
        let w0sq = w0 * w0;
        let a0 = k * k + k * bw + w0sq;
        let b0 = design.peak_gain * bw * k / a0;
        Self::from_coefficients(
            b0,
            S::zero(),
            -b0,
            (two * w0sq - two * k * k) / a0,
            (k * k - k * bw + w0sq) / a0,
        )
    }

    #[inline]
    pub fn process(&mut self, x: S) -> S {
        let y = self.b0 * x + self.s1;
        self.s1 = self.b1 * x - self.a1 * y + self.s2;
        self.s2 = self.b2 * x - self.a2 * y;
        y
    }

    pub fn reset(&mut self) {
        self.s1 = S::zero();
        self.s2 = S::zero();
    }

    pub fn state(&self) -> (S, S) {
        (self.s1, self.s2)
    }

    /// Magnitudes of the two poles, roots of `z² + a1 z + a2`.
    pub fn pole_radii(&self) -> (S, S) {
        let disc = self.a1 * self.a1 - S::lit(4.0) * self.a2;
        if disc < S::zero() {
            let r = self.a2.abs().sqrt();
            (r, r)
        } else {
            let sq = disc.sqrt();
            let two = S::lit(2.0);
            ((-self.a1 + sq).abs() / two, (-self.a1 - sq).abs() / two)
        }
    }

    pub fn is_stable(&self) -> bool {
        let (r1, r2) = self.pole_radii();
        r1 < S::one() && r2 < S::one()
    }

    /// `|H(e^{jω})|` of the realized filter at `f` Hz.
    pub fn response_magnitude(&self, f: S, fs: S) -> S {
        let w = S::TAU() * f / fs;
        let z1 = Complex::new(w.cos(), -w.sin());
        let z2 = z1 * z1;
        let num = Complex::new(self.b0, S::zero()) + z1 * self.b1 + z2 * self.b2;
        let den = Complex::new(S::one(), S::zero()) + z1 * self.a1 + z2 * self.a2;
        (num / den).norm()
    }
}

fn check_rate<S: Scalar>(design: &PehDesign<S>, fs: S) -> Result<()> {
    let min = design.f0 * S::lit(MIN_OVERSAMPLING);
    if fs.is_nan() || fs < min {
        return Err(Error::SampleRateTooLow { fs: fs.as_f64(), f0: design.f0.as_f64(), min: min.as_f64() });
    }
    Ok(())
}

/// Harvester voltage for an acceleration record: the discretized `H(s)`
/// driven from zero state, same rate and length as the input.
pub fn simulate_voltage<S: Scalar>(design: &PehDesign<S>, accel: &TimeSeries<S>) -> Result<TimeSeries<S>> {
    if accel.unit() != Unit::AccelerationG {
        return Err(Error::WrongUnit { expected: Unit::AccelerationG.as_str(), found: accel.unit().as_str() });
    }
    check_rate(design, accel.fs())?;
    let mut filter = Biquad::bandpass(design, accel.fs());
    let out = accel.samples().iter().map(|&x| filter.process(x)).collect();
    Ok(accel.with_samples(out, Unit::Volts))
}

/// Amplitude of the `f` Hz component of `xs` by least-squares fit of
/// `a·sin + b·cos`.
pub fn tone_amplitude<S: Scalar>(xs: &[S], f: S, fs: S) -> S {
    let (mut ss, mut cc, mut sc, mut xsn, mut xcs) = (S::zero(), S::zero(), S::zero(), S::zero(), S::zero());
    for (n, &x) in xs.iter().enumerate() {
        let ph = S::TAU() * f * S::from_usize_lossy(n) / fs;
        let (s, c) = ph.sin_cos();
        ss += s * s;
        cc += c * c;
        sc += s * c;
        xsn += x * s;
        xcs += x * c;
    }
    let det = ss * cc - sc * sc;
    if det == S::zero() {
        return S::zero();
    }
    let a = (xsn * cc - xcs * sc) / det;
    let b = (xcs * ss - xsn * sc) / det;
    (a * a + b * b).sqrt()
}

/// Drives a unit sine at `f` through the realized filter, waits for the
/// transient to die out and returns the fitted output amplitude.
pub fn measured_gain<S: Scalar>(design: &PehDesign<S>, fs: S, f: S) -> Result<S> {
    check_rate(design, fs)?;
    let settle = (S::lit(20.0) * design.time_constant()).max(S::one());
    let measure = (S::lit(50.0) / f).max(S::one());
    let input = synth_sine(f, S::one(), S::zero(), fs, settle + measure)?;
    let out = simulate_voltage(design, &input)?;
    let skip = round_count(settle * fs).min(out.len());
    Ok(tone_amplitude(&out.samples()[skip..], f, fs))
}

/// Worst relative error between measured steady-state gain and
/// [`frf_magnitude`] over `probes`.
pub fn verify_discretization<S: Scalar>(design: &PehDesign<S>, fs: S, probes: &[S]) -> Result<S> {
    check_rate(design, fs)?;
    if probes.is_empty() {
        return Err(Error::EmptyInput("no probe frequencies"));
    }
    let nyquist = fs / S::lit(2.0);
    let mut worst = S::zero();
    for &f in probes {
        if !(f > S::zero() && f < nyquist) {
            return Err(Error::invalid(format!("probe {f} Hz outside (0, {nyquist})")));
        }
        let expected = frf_magnitude(design, f);
        let err = (measured_gain(design, fs, f)? - expected).abs() / expected;
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Lower and upper half-power frequencies of the realized filter, located by
/// bisection on its exact frequency response.
pub fn half_power_points<S: Scalar>(design: &PehDesign<S>, fs: S) -> (S, S) {
    let filter = Biquad::bandpass(design, fs);
    let target = design.peak_gain / S::SQRT_2();
    let g = |f: S| filter.response_magnitude(f, fs) - target;
    let bisect = |mut lo: S, mut hi: S| {
        // g(lo) and g(hi) have opposite signs
        let rising = g(lo) < S::zero();
        for _ in 0..200 {
            let mid = (lo + hi) / S::lit(2.0);
            if (g(mid) < S::zero()) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / S::lit(2.0)
    };
    let lower = bisect(design.f0 / S::lit(4.0), design.f0);
    let upper = bisect(design.f0, (design.f0 * S::lit(4.0)).min(fs / S::lit(2.0)));
    (lower, upper)
}
