//! Rectifier, integrator and low-rate sampler.
//!
//! The rectifier is ideal power conversion into the load, so the integrator
//! accumulates `v(t)²/R`. Sample `k` is the energy delivered over
//! `[(k-1)T, kT)`; any trailing samples that do not fill a period are dropped.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::{round_count, Scalar};
use crate::signal::{sum_squares, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySamples<S> {
    /// Energy per period, joules.
    pub y: Vec<S>,
    /// Integration period, seconds.
    pub period: S,
    pub r_ohm: S,
}

impl<S: Scalar> EnergySamples<S> {
    /// Rate at which `y` is produced, `1/T`.
    pub fn feature_rate(&self) -> S {
        S::one() / self.period
    }

    pub fn total(&self) -> S {
        self.y.iter().copied().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<S> {
    pub values: Vec<S>,
    pub design_name: String,
    pub period: S,
}

impl<S: Scalar> FeatureVector<S> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

fn check_period_and_load<S: Scalar>(period: S, r_ohm: S) -> Result<()> {
    if !(period.is_finite() && period > S::zero()) {
        return Err(Error::invalid(format!("integration period must be positive, got {period}")));
    }
    if !(r_ohm.is_finite() && r_ohm > S::zero()) {
        return Err(Error::invalid(format!("load resistance must be positive, got {r_ohm}")));
    }
    Ok(())
}

/// Per-period energies `Σ v²/(R·fs)` over consecutive blocks of `round(T·fs)` samples.
pub fn integrate_energy<S: Scalar>(v: &TimeSeries<S>, period: S, r_ohm: S) -> Result<EnergySamples<S>> {
    check_period_and_load(period, r_ohm)?;
    if v.is_empty() {
        return Err(Error::EmptyInput("voltage trace"));
    }
    let block = round_count(period * v.fs());
    if block == 0 {
        return Err(Error::invalid(format!("period {period} s is shorter than one sample at {} Hz", v.fs())));
    }
    let scale = r_ohm * v.fs();
    let y = v.samples().chunks_exact(block).map(|c| sum_squares(c) / scale).collect();
    Ok(EnergySamples { y, period, r_ohm })
}

/// Energy feature of one harvester trace; dimension `floor(duration / T)`.
pub fn make_feature<S: Scalar>(
    v: &TimeSeries<S>,
    period: S,
    r_ohm: S,
    design_name: &str,
) -> Result<FeatureVector<S>> {
    let e = integrate_energy(v, period, r_ohm)?;
    if e.y.is_empty() {
        return Err(Error::InsufficientDuration { needed: round_count(period * v.fs()), available: v.len() });
    }
    Ok(FeatureVector { values: e.y, design_name: design_name.to_string(), period })
}

/// Mean energy per label over every component of every feature.
pub fn mean_state_energy<'a, S, L, I>(features: I) -> Result<BTreeMap<L, S>>
where
    S: Scalar,
    L: Ord + Clone + 'a,
    I: IntoIterator<Item = (&'a FeatureVector<S>, &'a L)>,
{
    let mut acc: BTreeMap<L, (S, usize)> = BTreeMap::new();
    for (f, label) in features {
        let slot = acc.entry(label.clone()).or_insert((S::zero(), 0));
        for &x in &f.values {
            slot.0 += x;
            slot.1 += 1;
        }
    }
    if acc.is_empty() {
        return Err(Error::EmptyInput("no features to average"));
    }
    Ok(acc
        .into_iter()
        .map(|(l, (sum, n))| (l, if n == 0 { S::zero() } else { sum / S::from_usize_lossy(n) }))
        .collect())
}
