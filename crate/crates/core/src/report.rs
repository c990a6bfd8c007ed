//! Experiment drivers behind the `peh` subcommands. Each writes CSV as the
//! normative artifact (plus an SVG rendering where useful) and returns a
//! summary the caller can print.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::classify::{accuracy_sweep, confusion_rows, mean_std, repeated_holdout, SweepRow};
use crate::config::RunConfig;
use crate::dataset::{
    features_from_recordings, load_all, load_manifest, synth_surrogate_corpus, write_file, LabeledFeature, Manifest,
    StateLabel, SurrogateSpec,
};
use crate::error::{Error, Result};
use crate::frontend::{integrate_energy, mean_state_energy};
use crate::peh::{simulate_voltage, PehDesign};
use crate::signal::synth_sine;
use crate::svg;

/// Linear per-sample energy model for the sensing node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCostModel {
    /// Joules per ADC conversion.
    pub e_adc_per_sample: f64,
    /// Joules to transmit one sample.
    pub e_tx_per_sample: f64,
    pub bits_per_sample: u32,
}

impl Default for EnergyCostModel {
    /// Illustrative placeholders only: 10 nJ per conversion and a 16-bit
    /// sample at 50 nJ/bit over the radio.
    fn default() -> Self {
        Self { e_adc_per_sample: 1.0e-8, e_tx_per_sample: 16.0 * 5.0e-8, bits_per_sample: 16 }
    }
}

impl EnergyCostModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_adc_per_sample >= 0.0 && self.e_tx_per_sample >= 0.0) {
            return Err(Error::invalid("energy costs must be non-negative"));
        }
        Ok(())
    }

    /// Joules per second at a sampling rate.
    pub fn power(&self, rate_hz: f64) -> f64 {
        rate_hz * (self.e_adc_per_sample + self.e_tx_per_sample)
    }
}

/// Sampling and energy comparison between raw acquisition and one energy
/// feature per integration period.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub fs_raw: f64,
    pub period_s: f64,
    pub feature_rate: f64,
    /// `fs_raw · T`.
    pub reduction_ratio: f64,
    pub orders_of_magnitude: f64,
    pub raw_bits_per_s: f64,
    pub feature_bits_per_s: f64,
    pub raw_power_w: f64,
    pub feature_power_w: f64,
    pub saved_power_w: f64,
}

pub fn energy_report(fs_raw: f64, period_s: f64, cost: &EnergyCostModel) -> Result<EnergyReport> {
    if !(fs_raw.is_finite() && fs_raw > 0.0 && period_s.is_finite() && period_s > 0.0) {
        return Err(Error::invalid("fs_raw and T must be positive"));
    }
    cost.validate()?;
    let feature_rate = 1.0 / period_s;
    let ratio = fs_raw * period_s;
    let raw_power = cost.power(fs_raw);
    let feature_power = cost.power(feature_rate);
    Ok(EnergyReport {
        fs_raw,
        period_s,
        feature_rate,
        reduction_ratio: ratio,
        orders_of_magnitude: ratio.log10(),
        raw_bits_per_s: fs_raw * cost.bits_per_sample as f64,
        feature_bits_per_s: feature_rate * cost.bits_per_sample as f64,
        raw_power_w: raw_power,
        feature_power_w: feature_power,
        saved_power_w: raw_power - feature_power,
    })
}

impl EnergyReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "raw acquisition:      {} samples/s ({} bit/s)", self.fs_raw, self.raw_bits_per_s);
        let _ = writeln!(
            s,
            "energy feature:       {:.2} samples/s (T = {} s, {:.2} bit/s)",
            self.feature_rate, self.period_s, self.feature_bits_per_s
        );
        let _ = writeln!(s, "reduction ratio:      {}", self.reduction_ratio);
        let _ = writeln!(s, "orders of magnitude:  {:.2} (exact log10 of the ratio)", self.orders_of_magnitude);
        let _ = writeln!(s, "ADC+TX power, raw:     {:.4e} J/s", self.raw_power_w);
        let _ = writeln!(s, "ADC+TX power, feature: {:.4e} J/s", self.feature_power_w);
        let _ = writeln!(s, "saving:                {:.4e} J/s", self.saved_power_w);
        s
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("fs_raw_hz,T_s,feature_rate_hz,reduction_ratio,log10_ratio,raw_power_w,feature_power_w\n");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            self.fs_raw,
            self.period_s,
            self.feature_rate,
            self.reduction_ratio,
            self.orders_of_magnitude,
            self.raw_power_w,
            self.feature_power_w
        );
        s
    }
}

/// Two single-tone machines observed through two harvesters.
#[derive(Debug, Clone, PartialEq)]
pub struct ThoughtExperiment {
    /// `[healthy tone, faulty tone]`.
    pub inputs_hz: [f64; 2],
    pub designs: [PehDesign<f64>; 2],
    /// `energy[input][design]`, first period only.
    pub energy: [[f64; 2]; 2],
    pub period_s: f64,
    pub r_ohm: f64,
}

impl ThoughtExperiment {
    /// Decision for each input: index of the harvester collecting more energy.
    pub fn louder_design(&self) -> [usize; 2] {
        self.energy.map(|row| if row[0] >= row[1] { 0 } else { 1 })
    }

    /// `energy[i][louder] / energy[i][other]` per input.
    pub fn margins(&self) -> [f64; 2] {
        self.energy.map(|row| row[0].max(row[1]) / row[0].min(row[1]))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let [d0, d1] = &self.designs;
        let _ = writeln!(s, "energy over T = {} s into R = {} ohm [J]", self.period_s, self.r_ohm);
        let _ = writeln!(s, "{:>16} {:>16} {:>16}", "input", format!("{} ({} Hz)", d0.name, d0.f0), format!("{} ({} Hz)", d1.name, d1.f0));
        let names = ["healthy", "faulty"];
        for ((name, f), row) in names.iter().zip(self.inputs_hz).zip(self.energy) {
            let _ = writeln!(s, "{:>16} {:>16.6e} {:>16.6e}", format!("{name} {f} Hz"), row[0], row[1]);
        }
        let louder = self.louder_design();
        let margins = self.margins();
        for ((name, l), m) in names.iter().zip(louder).zip(margins) {
            let _ = writeln!(s, "{name} input: y({}) is larger by {m:.1}x", self.designs[l].name);
        }
        let separates = louder[0] != louder[1];
        let _ = writeln!(
            s,
            "decision rule (compare y1 vs y2): {}",
            if separates { "separates the two states" } else { "cannot separate the two states" }
        );
        s
    }

    pub fn csv(&self) -> String {
        let mut s = format!("input,input_hz,{},{}\n", self.designs[0].name, self.designs[1].name);
        for (i, name) in ["healthy", "faulty"].iter().enumerate() {
            let _ = writeln!(s, "{name},{},{},{}", self.inputs_hz[i], self.energy[i][0], self.energy[i][1]);
        }
        s
    }
}

/// Drives unit sines at `f_healthy` and `f_faulty` through both designs and
/// integrates the first period of each voltage.
pub fn thought_experiment(
    f_healthy: f64,
    f_faulty: f64,
    designs: [PehDesign<f64>; 2],
    period_s: f64,
    r_ohm: f64,
    fs: f64,
) -> Result<ThoughtExperiment> {
    let mut energy = [[0.0; 2]; 2];
    for (i, &f) in [f_healthy, f_faulty].iter().enumerate() {
        let u = synth_sine(f, 1.0, 0.0, fs, period_s)?;
        for (j, d) in designs.iter().enumerate() {
            let v = simulate_voltage(d, &u)?;
            let e = integrate_energy(&v, period_s, r_ohm)?;
            energy[i][j] = *e.y.first().ok_or(Error::EmptyInput("no complete period"))?;
        }
    }
    Ok(ThoughtExperiment { inputs_hz: [f_healthy, f_faulty], designs, energy, period_s, r_ohm })
}

fn feature_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = ["recording_id", "segment_index", "label", "design", "T_s"].iter().map(|s| s.to_string()).collect();
    h.extend((0..dim).map(|i| format!("feature_{i}")));
    h
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Loads and filters the configured manifest.
pub fn configured_manifest(cfg: &RunConfig) -> Result<Manifest> {
    let m = load_manifest(cfg.manifest_path()?)?;
    let m = m.filtered(&cfg.labels, cfg.bearing_type.as_deref(), cfg.load_w);
    if m.is_empty() {
        return Err(Error::EmptyManifest);
    }
    Ok(m)
}

fn feature_rows(features: &[LabeledFeature<f64>]) -> Vec<Vec<String>> {
    features
        .iter()
        .map(|f| {
            let mut r = vec![
                f.recording_id.clone(),
                f.segment_index.to_string(),
                f.label.to_string(),
                f.feature.design_name.clone(),
                f.feature.period.to_string(),
            ];
            r.extend(f.feature.values.iter().map(|v| v.to_string()));
            r
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOutcome {
    pub path: PathBuf,
    pub rows: usize,
}

/// Writes `features.csv` for every selected design. An empty manifest still
/// produces the header row before the error is returned.
pub fn run_extract(cfg: &RunConfig, out_dir: &Path) -> Result<ExtractOutcome> {
    cfg.validate()?;
    let designs = cfg.selected_designs()?;
    ensure_dir(out_dir)?;
    let path = out_dir.join("features.csv");
    let dim = (cfg.segment_s / cfg.t_s + 1e-9).floor() as usize;
    let header = feature_header(dim);
    let manifest = match configured_manifest(cfg) {
        Ok(m) => m,
        Err(e @ Error::EmptyManifest) => {
            write_csv(&path, &header, &[])?;
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    let recordings = load_all::<f64>(&manifest)?;
    let mut rows = Vec::new();
    for d in &designs {
        let feats = features_from_recordings(&manifest, &recordings, d, &cfg.pipeline_params(d))?;
        rows.extend(feature_rows(&feats));
    }
    write_csv(&path, &header, &rows)?;
    Ok(ExtractOutcome { path, rows: rows.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifySummary {
    pub design: String,
    pub period_s: f64,
    pub k: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub repeats: usize,
    pub labels: Vec<StateLabel>,
    /// Summed over repeats.
    pub confusion: Vec<Vec<usize>>,
}

impl ClassifySummary {
    pub fn render(&self) -> String {
        let mut s = format!(
            "{} T={} s k={}: accuracy {:.4} ± {:.4} over {} split(s)\n",
            self.design, self.period_s, self.k, self.mean_accuracy, self.std_accuracy, self.repeats
        );
        let _ = writeln!(s, "  confusion (rows true, cols predicted): {:?}", self.labels.iter().map(|l| l.as_str()).collect::<Vec<_>>());
        for (l, row) in self.labels.iter().zip(&self.confusion) {
            let _ = writeln!(s, "  {:>12} {:?}", l.as_str(), row);
        }
        s
    }
}

/// Repeated holdout kNN per selected design; writes `classify.csv`
/// (one row per repeat) and `confusion.csv` (summed over repeats).
pub fn run_classify(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<ClassifySummary>> {
    cfg.validate()?;
    let designs = cfg.selected_designs()?;
    let metric = cfg.metric()?;
    ensure_dir(out_dir)?;
    let manifest = configured_manifest(cfg)?;
    let recordings = load_all::<f64>(&manifest)?;

    let mut per_repeat = Vec::new();
    let mut confusion_out = Vec::new();
    let mut summaries = Vec::new();
    for d in &designs {
        let feats = features_from_recordings(&manifest, &recordings, d, &cfg.pipeline_params(d))?;
        let reports = repeated_holdout(&feats, cfg.k, metric, &cfg.split(), cfg.repeats)?;
        let mut labels: Vec<StateLabel> = reports.iter().flat_map(|r| r.labels.iter().copied()).collect();
        labels.sort();
        labels.dedup();
        let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
        for (i, r) in reports.iter().enumerate() {
            per_repeat.push(vec![
                i.to_string(),
                r.seed.to_string(),
                d.name.clone(),
                cfg.t_s.to_string(),
                cfg.k.to_string(),
                r.total().to_string(),
                r.correct().to_string(),
                r.accuracy.to_string(),
            ]);
            for (a, la) in r.labels.iter().enumerate() {
                for (b, lb) in r.labels.iter().enumerate() {
                    let (ia, ib) = (labels.binary_search(la).unwrap(), labels.binary_search(lb).unwrap());
                    confusion[ia][ib] += r.confusion[a][b];
                }
            }
        }
        for row in confusion_rows(&labels, &confusion) {
            let mut r = vec![d.name.clone()];
            r.extend(row);
            confusion_out.push(r);
        }
        let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
        let (mean, std) = mean_std(&acc);
        summaries.push(ClassifySummary {
            design: d.name.clone(),
            period_s: cfg.t_s,
            k: cfg.k,
            mean_accuracy: mean,
            std_accuracy: std,
            repeats: cfg.repeats,
            labels,
            confusion,
        });
    }
    let h = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    write_csv(
        &out_dir.join("classify.csv"),
        &h(&["repeat", "seed", "design", "T_s", "k", "n_validation", "n_correct", "accuracy"]),
        &per_repeat,
    )?;
    write_csv(&out_dir.join("confusion.csv"), &h(&["design", "true_label", "predicted_label", "count"]), &confusion_out)?;
    Ok(summaries)
}

/// Accuracy over every (design, T); writes `sweep.csv` and `sweep.svg`.
pub fn run_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let designs = cfg.selected_designs()?;
    let sweep_cfg = cfg.sweep_config()?;
    ensure_dir(out_dir)?;
    let manifest = configured_manifest(cfg)?;
    let rows = accuracy_sweep(&manifest, &designs, &cfg.periods(), &sweep_cfg)?;
    let header: Vec<String> = SweepRow::CSV_HEADER.iter().map(|s| s.to_string()).collect();
    let body: Vec<Vec<String>> = rows.iter().map(|r| r.csv_record().to_vec()).collect();
    write_csv(&out_dir.join("sweep.csv"), &header, &body)?;
    let mut series: BTreeMap<(u64, String), Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        series.entry((r.thickness_mm.to_bits(), r.design.clone())).or_default().push((r.period_s, r.mean_accuracy));
    }
    let series: Vec<(String, Vec<(f64, f64)>)> = series.into_iter().map(|((_, n), p)| (n, p)).collect();
    write_file(&out_dir.join("sweep.svg"), &svg::accuracy_lines("Detection accuracy", "integration period T [s]", &series))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub design: String,
    pub thickness_mm: f64,
    pub mean_healthy: f64,
    pub mean_faulty: f64,
    /// Perpendicular distance to the line `faulty = healthy`.
    pub distance_to_diagonal: f64,
}

/// Mean faulty vs mean healthy energy per design; writes `scatter.csv` and `scatter.svg`.
pub fn run_scatter(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<ScatterPoint>> {
    cfg.validate()?;
    let designs = cfg.selected_designs()?;
    ensure_dir(out_dir)?;
    let manifest = load_manifest(cfg.manifest_path()?)?.filtered(
        &[cfg.healthy_label, cfg.faulty_label],
        cfg.bearing_type.as_deref(),
        cfg.load_w,
    );
    if manifest.is_empty() {
        return Err(Error::EmptyManifest);
    }
    let recordings = load_all::<f64>(&manifest)?;
    let mut points = Vec::new();
    for d in &designs {
        let feats = features_from_recordings(&manifest, &recordings, d, &cfg.pipeline_params(d))?;
        let means = mean_state_energy(feats.iter().map(|f| (&f.feature, &f.label)))?;
        let get = |l: StateLabel| {
            means.get(&l).copied().ok_or_else(|| Error::invalid(format!("no {l} recordings in manifest")))
        };
        let (h, f) = (get(cfg.healthy_label)?, get(cfg.faulty_label)?);
        points.push(ScatterPoint {
            design: d.name.clone(),
            thickness_mm: d.thickness_mm,
            mean_healthy: h,
            mean_faulty: f,
            distance_to_diagonal: (f - h).abs() / std::f64::consts::SQRT_2,
        });
    }
    let header: Vec<String> = ["design", "thickness_mm", "mean_healthy_j", "mean_faulty_j", "distance_to_diagonal"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let body: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                p.design.clone(),
                p.thickness_mm.to_string(),
                p.mean_healthy.to_string(),
                p.mean_faulty.to_string(),
                p.distance_to_diagonal.to_string(),
            ]
        })
        .collect();
    write_csv(&out_dir.join("scatter.csv"), &header, &body)?;
    let svg_points: Vec<(String, f64, f64)> = points.iter().map(|p| (p.design.clone(), p.mean_healthy, p.mean_faulty)).collect();
    let title = format!("{} vs {}, T = {} s", cfg.faulty_label, cfg.healthy_label, cfg.t_s);
    let svg = svg::scatter_with_diagonal(
        &title,
        &format!("mean {} energy [J]", cfg.healthy_label),
        &format!("mean {} energy [J]", cfg.faulty_label),
        &svg_points,
    );
    write_file(&out_dir.join("scatter.svg"), &svg)?;
    Ok(points)
}

/// Generates a surrogate corpus into `out_dir`.
pub fn run_surrogate_gen(spec: &SurrogateSpec, out_dir: &Path) -> Result<Manifest> {
    synth_surrogate_corpus(spec, out_dir)
}
