//! Run configuration: flat TOML key-value files whose keys mirror the
//! command-line options.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::classify::{Metric, SplitConfig, SweepConfig, SweepMode};
use crate::dataset::{PipelineParams, StateLabel};
use crate::error::{Error, Result};
use crate::peh::{DesignTable, PehDesign};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    /// Design names or thicknesses (`"0.45"`, `"0.45mm"`, `"pzt-0.45mm"`).
    /// Empty means every design in the table.
    pub designs: Vec<String>,
    /// TOML file overriding the built-in design table.
    pub design_table: Option<PathBuf>,
    /// Integration period `T` in seconds.
    pub t_s: f64,
    /// Periods visited by `sweep`; defaults to `[t_s]`.
    pub t_values: Vec<f64>,
    pub sweep_mode: String,
    /// Load resistance; falls back to each design's own value.
    pub r_ohm: Option<f64>,
    pub segment_s: f64,
    pub segments_per_recording: usize,
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
    pub k: usize,
    pub repeats: usize,
    pub metric: String,
    /// Restrict to these states; empty keeps all.
    pub labels: Vec<StateLabel>,
    pub bearing_type: Option<String>,
    pub load_w: Option<u32>,
    /// Reference and fault classes for `scatter`.
    pub healthy_label: StateLabel,
    pub faulty_label: StateLabel,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            designs: Vec::new(),
            design_table: None,
            t_s: 3.0,
            t_values: Vec::new(),
            sweep_mode: "fixed_segment".into(),
            r_ohm: None,
            segment_s: 3.0,
            segments_per_recording: 3,
            train_fraction: 0.8,
            stratified: true,
            seed: 0,
            k: 3,
            repeats: 20,
            metric: "euclidean".into(),
            labels: Vec::new(),
            bearing_type: None,
            load_w: None,
            healthy_label: StateLabel::Healthy,
            faulty_label: StateLabel::BallCrack,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(e.to_string()))
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigFile { path: path.to_path_buf(), message: e.to_string() })?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| Error::ConfigFile { path: path.to_path_buf(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.manifest, &mut cfg.design_table, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Checks every numeric precondition before any data is touched.
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {x}")))
            }
        };
        pos("t_s", self.t_s)?;
        pos("segment_s", self.segment_s)?;
        for &t in &self.t_values {
            pos("t_values entry", t)?;
        }
        if let Some(r) = self.r_ohm {
            pos("r_ohm", r)?;
        }
        if self.segments_per_recording == 0 {
            return Err(Error::invalid("segments_per_recording must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be at least 1"));
        }
        self.split().validate()?;
        self.metric()?;
        self.sweep_mode()?;
        if self.healthy_label == self.faulty_label {
            return Err(Error::invalid("healthy_label and faulty_label must differ"));
        }
        Ok(())
    }

    pub fn manifest_path(&self) -> Result<&Path> {
        self.manifest.as_deref().ok_or_else(|| Error::invalid("no manifest given (set `manifest` or --manifest)"))
    }

    pub fn split(&self) -> SplitConfig {
        SplitConfig { train_fraction: self.train_fraction, seed: self.seed, stratified: self.stratified }
    }

    pub fn metric(&self) -> Result<Metric> {
        self.metric.parse()
    }

    pub fn sweep_mode(&self) -> Result<SweepMode> {
        self.sweep_mode.parse()
    }

    pub fn design_table(&self) -> Result<DesignTable<f64>> {
        match &self.design_table {
            Some(p) => DesignTable::from_file(p),
            None => Ok(DesignTable::default()),
        }
    }

    /// Selected designs in the order given, or the whole table.
    pub fn selected_designs(&self) -> Result<Vec<PehDesign<f64>>> {
        let table = self.design_table()?;
        if self.designs.is_empty() {
            return Ok(table.designs().to_vec());
        }
        self.designs.iter().map(|k| table.lookup(k).cloned()).collect()
    }

    pub fn pipeline_params(&self, design: &PehDesign<f64>) -> PipelineParams<f64> {
        PipelineParams {
            segment_s: self.segment_s,
            segments_per_recording: self.segments_per_recording,
            period: self.t_s,
            r_ohm: self.r_ohm.unwrap_or(design.r_ohm),
        }
    }

    pub fn periods(&self) -> Vec<f64> {
        if self.t_values.is_empty() {
            vec![self.t_s]
        } else {
            self.t_values.clone()
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig<f64>> {
        Ok(SweepConfig {
            segment_s: self.segment_s,
            segments_per_recording: self.segments_per_recording,
            r_ohm: self.r_ohm,
            k: self.k,
            metric: self.metric()?,
            split: self.split(),
            n_repeats: self.repeats,
            mode: self.sweep_mode()?,
        })
    }
}
