//! Band-energy fault features from piezoelectric harvesters.
//!
//! A harvester behaves like a resonant band-pass filter on the vibration it
//! is mounted to. Squaring and integrating its voltage over a long period `T`
//! yields one energy value per period, a feature that can be sampled at
//! `1/T` Hz instead of the tens of kHz a conventional accelerometer chain
//! needs. This crate simulates that chain end to end:
//!
//! - [`signal`]: time series, synthesis, spectra, segmentation and the
//!   digital band-energy baseline.
//! - [`peh`]: harvester designs, their frequency response and a discretized
//!   filter realization.
//! - [`frontend`]: rectify/integrate/sample into energy features.
//! - [`dataset`]: manifests, recording formats, surrogate corpora and the
//!   feature-building pipeline.
//! - [`classify`]: stratified splits, kNN, evaluation and sweeps.
//! - [`report`]: the experiment drivers behind the `peh` command line.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below are what the command line uses.

pub mod classify;
pub mod config;
pub mod dataset;
pub mod error;
pub mod frontend;
pub mod peh;
pub mod report;
pub mod scalar;
pub mod signal;
pub mod svg;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

pub use classify::{EvalReport, KnnModel, Metric, SplitConfig};
pub use dataset::{LabeledFeature, Manifest, RecordingMeta, StateLabel};
pub use frontend::{EnergySamples, FeatureVector};
pub use peh::{Biquad, DesignTable, PehDesign};
pub use signal::{Spectrum, TimeSeries, Unit};

pub type TimeSeries64 = TimeSeries<f64>;
pub type TimeSeries32 = TimeSeries<f32>;
pub type Spectrum64 = Spectrum<f64>;
pub type PehDesign64 = PehDesign<f64>;
pub type PehDesign32 = PehDesign<f32>;
pub type Biquad64 = Biquad<f64>;
pub type Biquad32 = Biquad<f32>;
pub type EnergySamples64 = EnergySamples<f64>;
pub type FeatureVector64 = FeatureVector<f64>;
pub type LabeledFeature64 = LabeledFeature<f64>;
pub type DesignTable64 = DesignTable<f64>;
