//! Recording manifests, on-disk formats, surrogate corpora and the
//! segment → harvester → energy pipeline.
//!
//! Manifest: CSV with header `path,label,bearing_type,load_w,fs_hz`; paths are
//! relative to the manifest's directory.
//!
//! Recordings come in two formats, chosen by extension:
//! - `.f32` / `.bin`: raw little-endian `f32` samples, with a sidecar
//!   `<stem>.hdr` holding `fs_hz = ...` and `n_samples = ...`;
//! - anything else: text, one decimal value per line.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::frontend::{make_feature, FeatureVector};
use crate::peh::{simulate_voltage, PehDesign};
use crate::scalar::Scalar;
use crate::signal::{segment, synth_tones, TimeSeries, Tone, Unit};

pub const MANIFEST_HEADER: [&str; 5] = ["path", "label", "bearing_type", "load_w", "fs_hz"];
const LOADS_W: [u32; 3] = [0, 200, 400];

/// Machine state of a bearing recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateLabel {
    Healthy,
    InnerCrack,
    OuterCrack,
    BallCrack,
    InnerOuter,
    InnerBall,
    OuterBall,
}

impl StateLabel {
    pub const ALL: [StateLabel; 7] = [
        StateLabel::Healthy,
        StateLabel::InnerCrack,
        StateLabel::OuterCrack,
        StateLabel::BallCrack,
        StateLabel::InnerOuter,
        StateLabel::InnerBall,
        StateLabel::OuterBall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StateLabel::Healthy => "healthy",
            StateLabel::InnerCrack => "inner_crack",
            StateLabel::OuterCrack => "outer_crack",
            StateLabel::BallCrack => "ball_crack",
            StateLabel::InnerOuter => "inner_outer",
            StateLabel::InnerBall => "inner_ball",
            StateLabel::OuterBall => "outer_ball",
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLabel(pub String);

impl fmt::Display for UnknownLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown label {:?}", self.0)
    }
}

impl std::error::Error for UnknownLabel {}

impl FromStr for StateLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        StateLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s.trim())
            .ok_or_else(|| UnknownLabel(s.trim().to_string()))
    }
}

impl<'de> Deserialize<'de> for StateLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordingMeta {
    /// Path as written in the manifest; doubles as the recording id.
    pub id: String,
    /// `id` resolved against the manifest directory.
    pub path: PathBuf,
    pub label: StateLabel,
    pub bearing_type: String,
    pub load_w: u32,
    pub fs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<RecordingMeta>,
    pub root: PathBuf,
}

impl Manifest {
    pub fn new(entries: Vec<RecordingMeta>, root: impl Into<PathBuf>) -> Self {
        Self { entries, root: root.into() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Recording count per (state, bearing type, load).
    pub fn counts(&self) -> BTreeMap<(StateLabel, String, u32), usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry((e.label, e.bearing_type.clone(), e.load_w)).or_insert(0) += 1;
        }
        out
    }

    /// Keeps entries matching every given filter; `None` or empty means "any".
    pub fn filtered(&self, labels: &[StateLabel], bearing_type: Option<&str>, load_w: Option<u32>) -> Manifest {
        let entries = self
            .entries
            .iter()
            .filter(|e| labels.is_empty() || labels.contains(&e.label))
            .filter(|e| bearing_type.is_none_or(|b| e.bearing_type == b))
            .filter(|e| load_w.is_none_or(|w| e.load_w == w))
            .cloned()
            .collect();
        Manifest { entries, root: self.root.clone() }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(MANIFEST_HEADER)?;
        for e in &self.entries {
            w.write_record([
                e.id.as_str(),
                e.label.as_str(),
                e.bearing_type.as_str(),
                &e.load_w.to_string(),
                &e.fs.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Reads and validates a manifest CSV. Every referenced recording must exist.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Err(Error::EmptyManifest);
    }
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let bad = |line: usize, message: String| Error::Manifest { path: path.to_path_buf(), line, message };

    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(MANIFEST_HEADER.iter().copied()) {
        return Err(bad(1, format!("expected header {:?}", MANIFEST_HEADER.join(","))));
    }

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != MANIFEST_HEADER.len() {
            return Err(bad(line, format!("expected {} fields, found {}", MANIFEST_HEADER.len(), row.len())));
        }
        let id = row[0].to_string();
        if id.is_empty() {
            return Err(bad(line, "empty path".into()));
        }
        let label: StateLabel = row[1].parse().map_err(|e: UnknownLabel| bad(line, e.to_string()))?;
        let load_w: u32 = row[3].parse().map_err(|_| bad(line, format!("bad load_w {:?}", &row[3])))?;
        if !LOADS_W.contains(&load_w) {
            return Err(bad(line, format!("load_w {load_w} not one of {LOADS_W:?}")));
        }
        let fs: f64 = row[4].parse().map_err(|_| bad(line, format!("bad fs_hz {:?}", &row[4])))?;
        if !(fs.is_finite() && fs > 0.0) {
            return Err(bad(line, format!("fs_hz must be positive, got {fs}")));
        }
        if !seen.insert(id.clone()) {
            return Err(bad(line, format!("duplicate path {id}")));
        }
        let resolved = root.join(&id);
        if !resolved.is_file() {
            return Err(bad(line, format!("recording not found: {}", resolved.display())));
        }
        entries.push(RecordingMeta {
            id,
            path: resolved,
            label,
            bearing_type: row[2].to_string(),
            load_w,
            fs,
        });
    }
    if entries.is_empty() {
        return Err(Error::EmptyManifest);
    }
    Ok(Manifest { entries, root })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHeader {
    fs_hz: f64,
    n_samples: usize,
}

fn is_raw_f32(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("f32") | Some("bin"))
}

/// Sidecar header path for a raw recording.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("hdr")
}

/// Loads one recording as an acceleration series at the manifest's rate.
pub fn load_recording<S: Scalar>(meta: &RecordingMeta) -> Result<TimeSeries<S>> {
    let path = &meta.path;
    let bad = |message: String| Error::Recording { path: path.clone(), message };
    let samples: Vec<S> = if is_raw_f32(path) {
        let hdr_path = sidecar_path(path);
        let hdr_text = fs::read_to_string(&hdr_path).map_err(|e| Error::io(&hdr_path, e))?;
        let hdr: RawHeader = toml::from_str(&hdr_text)
            .map_err(|e| Error::Recording { path: hdr_path.clone(), message: e.to_string() })?;
        if (hdr.fs_hz - meta.fs).abs() > 1e-9 * meta.fs {
            return Err(bad(format!("header fs_hz {} disagrees with manifest {}", hdr.fs_hz, meta.fs)));
        }
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() % 4 != 0 {
            return Err(bad(format!("{} bytes is not a whole number of f32 samples", bytes.len())));
        }
        if bytes.len() / 4 != hdr.n_samples {
            return Err(bad(format!("header declares {} samples, file holds {}", hdr.n_samples, bytes.len() / 4)));
        }
        bytes
            .chunks_exact(4)
            .enumerate()
            .map(|(i, c)| {
                let x = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                if x.is_finite() {
                    Ok(S::lit(x as f64))
                } else {
                    Err(bad(format!("non-finite sample at index {i}")))
                }
            })
            .collect::<Result<_>>()?
    } else {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let x: f64 = t.parse().map_err(|_| bad(format!("row {}: cannot parse {t:?}", i + 1)))?;
            if !x.is_finite() {
                return Err(bad(format!("row {}: non-finite value {t:?}", i + 1)));
            }
            out.push(S::lit(x));
        }
        out
    };
    if samples.is_empty() {
        return Err(bad("no samples".into()));
    }
    TimeSeries::new(samples, S::lit(meta.fs), Unit::AccelerationG)
}

pub fn write_text_recording<S: Scalar>(path: &Path, ts: &TimeSeries<S>) -> Result<()> {
    let mut buf = String::with_capacity(ts.len() * 12);
    for x in ts.samples() {
        buf.push_str(&x.to_string());
        buf.push('\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Writes raw little-endian `f32` samples plus the sidecar header.
pub fn write_f32_recording<S: Scalar>(path: &Path, ts: &TimeSeries<S>) -> Result<()> {
    let mut bytes = Vec::with_capacity(ts.len() * 4);
    for x in ts.samples() {
        bytes.extend_from_slice(&(x.as_f64() as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let hdr = sidecar_path(path);
    let text = format!("fs_hz = {}\nn_samples = {}\n", ts.fs().as_f64(), ts.len());
    fs::write(&hdr, text).map_err(|e| Error::io(&hdr, e))
}

/// One segment's energy feature with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeature<S> {
    pub feature: FeatureVector<S>,
    pub label: StateLabel,
    pub recording_id: String,
    pub segment_index: usize,
}

/// Segmentation and integration settings shared by every recording.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams<S> {
    pub segment_s: S,
    pub segments_per_recording: usize,
    pub period: S,
    pub r_ohm: S,
}

/// Loads every recording in manifest order.
pub fn load_all<S: Scalar>(manifest: &Manifest) -> Result<Vec<TimeSeries<S>>> {
    manifest
        .entries
        .par_iter()
        .map(|m| {
            load_recording(m).map_err(|e| Error::InRecording { recording: m.id.clone(), source: Box::new(e) })
        })
        .collect()
}

/// Features for already-loaded recordings; `recordings[i]` belongs to `manifest.entries[i]`.
pub fn features_from_recordings<S: Scalar>(
    manifest: &Manifest,
    recordings: &[TimeSeries<S>],
    design: &PehDesign<S>,
    params: &PipelineParams<S>,
) -> Result<Vec<LabeledFeature<S>>> {
    if manifest.len() != recordings.len() {
        return Err(Error::invalid("recording list does not match manifest"));
    }
    let per_recording: Vec<Vec<LabeledFeature<S>>> = manifest
        .entries
        .par_iter()
        .zip(recordings.par_iter())
        .map(|(meta, rec)| {
            recording_features(meta, rec, design, params)
                .map_err(|e| Error::InRecording { recording: meta.id.clone(), source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    Ok(per_recording.into_iter().flatten().collect())
}

fn recording_features<S: Scalar>(
    meta: &RecordingMeta,
    rec: &TimeSeries<S>,
    design: &PehDesign<S>,
    params: &PipelineParams<S>,
) -> Result<Vec<LabeledFeature<S>>> {
    segment(rec, params.segment_s, params.segments_per_recording)?
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            let v = simulate_voltage(design, seg)?;
            Ok(LabeledFeature {
                feature: make_feature(&v, params.period, params.r_ohm, &design.name)?,
                label: meta.label,
                recording_id: meta.id.clone(),
                segment_index: i,
            })
        })
        .collect()
}

/// Segment → harvester → energy for every recording; manifest order, then segment order.
pub fn build_feature_set<S: Scalar>(
    manifest: &Manifest,
    design: &PehDesign<S>,
    params: &PipelineParams<S>,
) -> Result<Vec<LabeledFeature<S>>> {
    let recordings = load_all(manifest)?;
    features_from_recordings(manifest, &recordings, design, params)
}

/// A run of equally spaced, equal-amplitude tones in `[lo_hz, hi_hz]`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToneBand {
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub step_hz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub label: StateLabel,
    #[serde(default = "default_count")]
    pub count: usize,
    /// `[freq_hz, amplitude]` pairs.
    #[serde(default)]
    pub tones: Vec<[f64; 2]>,
    #[serde(default)]
    pub bands: Vec<ToneBand>,
    #[serde(default)]
    pub noise_sigma: f64,
    /// Relative standard deviation of a per-recording gain.
    #[serde(default)]
    pub gain_jitter: f64,
    /// Seed for this class; defaults to the corpus seed plus 1000 × class index.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_count() -> usize {
    7
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordingFormat {
    F32,
    Text,
}

/// Synthetic corpus description, loadable from TOML.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateSpec {
    #[serde(default = "default_fs")]
    pub fs_hz: f64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_format")]
    pub format: RecordingFormat,
    #[serde(default = "default_bearing")]
    pub bearing_type: String,
    #[serde(default)]
    pub load_w: u32,
    #[serde(rename = "class")]
    pub classes: Vec<ClassSpec>,
}

fn default_fs() -> f64 {
    51200.0
}
fn default_duration() -> f64 {
    10.0
}
fn default_format() -> RecordingFormat {
    RecordingFormat::F32
}
fn default_bearing() -> String {
    "6204".into()
}

impl Default for SurrogateSpec {
    /// Seven healthy and seven ball-crack recordings of 10 s at 51.2 kHz.
    ///
    /// Healthy: two narrow tones (60 Hz, 400 Hz) outside every harvester band,
    /// light noise. Ball crack: a comb of weak tones from 185 to 260 Hz over a
    /// broadband noise floor, so its extra energy lands in the 200 Hz band.
    fn default() -> Self {
        Self {
            fs_hz: default_fs(),
            duration_s: default_duration(),
            seed: 0,
            format: RecordingFormat::F32,
            bearing_type: default_bearing(),
            load_w: 0,
            classes: vec![
                ClassSpec {
                    label: StateLabel::Healthy,
                    count: 7,
                    tones: vec![[60.0, 0.8], [400.0, 0.5]],
                    bands: vec![],
                    noise_sigma: 0.05,
                    gain_jitter: 0.1,
                    seed: None,
                },
                ClassSpec {
                    label: StateLabel::BallCrack,
                    count: 7,
                    tones: vec![],
                    bands: vec![ToneBand { lo_hz: 185.0, hi_hz: 260.0, step_hz: 5.0, amplitude: 0.08 }],
                    noise_sigma: 0.3,
                    gain_jitter: 0.1,
                    seed: None,
                },
            ],
        }
    }
}

impl SurrogateSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::invalid(format!("surrogate spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs_hz.is_finite() && self.fs_hz > 0.0) || !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::invalid("surrogate fs_hz and duration_s must be positive"));
        }
        if !LOADS_W.contains(&self.load_w) {
            return Err(Error::invalid(format!("load_w {} not one of {LOADS_W:?}", self.load_w)));
        }
        let nyquist = self.fs_hz / 2.0;
        for c in &self.classes {
            for b in &c.bands {
                if !(b.step_hz > 0.0 && b.lo_hz > 0.0 && b.lo_hz <= b.hi_hz) {
                    return Err(Error::invalid(format!("{}: bad tone band {b:?}", c.label)));
                }
            }
            if c.tones.iter().any(|t| t[0] >= nyquist) || c.bands.iter().any(|b| b.hi_hz >= nyquist) {
                return Err(Error::Aliasing { freq: nyquist, nyquist });
            }
            if c.noise_sigma < 0.0 || c.gain_jitter < 0.0 {
                return Err(Error::invalid(format!("{}: negative noise or jitter", c.label)));
            }
        }
        Ok(())
    }
}

impl ClassSpec {
    fn tone_list(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.tones.iter().map(|t| (t[0], t[1])).collect();
        for b in &self.bands {
            let n = ((b.hi_hz - b.lo_hz) / b.step_hz + 1e-9).floor() as usize;
            out.extend((0..=n).map(|i| (b.lo_hz + i as f64 * b.step_hz, b.amplitude)));
        }
        out
    }
}

/// Generates one surrogate recording in `f64`.
pub fn synth_recording(spec: &SurrogateSpec, class: &ClassSpec, seed: u64) -> Result<TimeSeries<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tones: Vec<Tone<f64>> = class
        .tone_list()
        .into_iter()
        .map(|(freq, amplitude)| Tone { freq, amplitude, phase: rng.random_range(0.0..std::f64::consts::TAU) })
        .collect();
    let z: f64 = StandardNormal.sample(&mut rng);
    let gain = (1.0 + class.gain_jitter * z).max(0.1);
    let noise_seed: u64 = rng.random();
    let ts = synth_tones(&tones, class.noise_sigma, spec.fs_hz, spec.duration_s, noise_seed)?;
    let samples = ts.samples().iter().map(|x| x * gain).collect();
    TimeSeries::new(samples, spec.fs_hz, Unit::AccelerationG)
}

fn recording_seed(class_seed: u64, index: usize) -> u64 {
    class_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

/// Writes the corpus into `dir` (created if needed) with a `manifest.csv`,
/// and returns the manifest.
pub fn synth_surrogate_corpus(spec: &SurrogateSpec, dir: &Path) -> Result<Manifest> {
    spec.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ext = match spec.format {
        RecordingFormat::F32 => "f32",
        RecordingFormat::Text => "txt",
    };
    let mut jobs = Vec::new();
    for (ci, class) in spec.classes.iter().enumerate() {
        let class_seed = class.seed.unwrap_or(spec.seed.wrapping_add(1000 * ci as u64));
        for i in 0..class.count {
            let id = format!("{}_{:02}_c{}.{ext}", class.label, i, ci);
            jobs.push((class, id, recording_seed(class_seed, i)));
        }
    }
    let entries = jobs
        .par_iter()
        .map(|(class, id, seed)| {
            let path = dir.join(id);
            let ts = synth_recording(spec, class, *seed)?;
            match spec.format {
                RecordingFormat::F32 => write_f32_recording(&path, &ts)?,
                RecordingFormat::Text => write_text_recording(&path, &ts)?,
            }
            Ok(RecordingMeta {
                id: id.clone(),
                path,
                label: class.label,
                bearing_type: spec.bearing_type.clone(),
                load_w: spec.load_w,
                fs: spec.fs_hz,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest { entries, root: dir.to_path_buf() };
    manifest.write_csv(&dir.join("manifest.csv"))?;
    Ok(manifest)
}

/// Writes `text` to `path`, for small fixtures and reports.
pub fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::peh::design_from_thickness;

    fn touch(dir: &Path, name: &str) {
        fs::write(dir.join(name), "0\n").unwrap();
    }

    fn manifest_text(rows: &[(&str, &str)]) -> String {
        let mut s = String::from("path,label,bearing_type,load_w,fs_hz\n");
        for (p, l) in rows {
            s.push_str(&format!("{p},{l},6204,0,51200\n"));
        }
        s
    }

    #[test]
    fn label_tokens_round_trip() {
        for l in StateLabel::ALL {
            assert_eq!(l.as_str().parse::<StateLabel>().unwrap(), l);
        }
        assert!("ballcrak".parse::<StateLabel>().is_err());
    }

    #[test]
    fn manifest_with_fourteen_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut rows = Vec::new();
        let names: Vec<(String, &str)> = (0..14)
            .map(|i| (format!("r{i}.txt"), if i < 7 { "healthy" } else { "ball_crack" }))
            .collect();
        for (n, l) in &names {
            touch(dir.path(), n);
            rows.push((n.as_str(), *l));
        }
        let p = dir.path().join("m.csv");
        fs::write(&p, manifest_text(&rows)).unwrap();
        let m = load_manifest(&p).unwrap();
        assert_eq!(m.len(), 14);
        let counts = m.counts();
        assert_eq!(counts[&(StateLabel::Healthy, "6204".to_string(), 0)], 7);
        assert_eq!(counts[&(StateLabel::BallCrack, "6204".to_string(), 0)], 7);
        assert_eq!(m.filtered(&[StateLabel::BallCrack], None, None).len(), 7);
        assert_eq!(m.filtered(&[], Some("6205"), None).len(), 0);
        assert_eq!(m.filtered(&[], None, Some(0)).len(), 14);
    }

    #[test]
    fn manifest_errors() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "a.txt");
        let p = dir.path().join("m.csv");

        fs::write(&p, "").unwrap();
        assert!(matches!(load_manifest(&p), Err(Error::EmptyManifest)));
        fs::write(&p, "path,label,bearing_type,load_w,fs_hz\n").unwrap();
        assert!(matches!(load_manifest(&p), Err(Error::EmptyManifest)));

        fs::write(&p, manifest_text(&[("a.txt", "healthy"), ("a.txt", "ballcrak")])).unwrap();
        let err = load_manifest(&p).unwrap_err().to_string();
        assert!(err.contains("ballcrak") && err.contains(":3:"), "{err}");

        fs::write(&p, manifest_text(&[("a.txt", "healthy"), ("a.txt", "healthy")])).unwrap();
        assert!(load_manifest(&p).unwrap_err().to_string().contains("duplicate"));

        fs::write(&p, manifest_text(&[("missing.txt", "healthy")])).unwrap();
        assert!(load_manifest(&p).unwrap_err().to_string().contains("not found"));

        fs::write(&p, "path,label\na.txt,healthy\n").unwrap();
        assert!(matches!(load_manifest(&p), Err(Error::Manifest { line: 1, .. })));

        fs::write(&p, "path,label,bearing_type,load_w,fs_hz\na.txt,healthy,6204,100,51200\n").unwrap();
        assert!(load_manifest(&p).is_err());

        assert!(matches!(load_manifest(&dir.path().join("nope.csv")), Err(Error::Io { .. })));
    }

    fn meta(path: PathBuf, fs: f64) -> RecordingMeta {
        RecordingMeta {
            id: path.file_name().unwrap().to_string_lossy().into(),
            path,
            label: StateLabel::Healthy,
            bearing_type: "6204".into(),
            load_w: 0,
            fs,
        }
    }

    #[test]
    fn text_recording_ten_seconds() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.txt");
        let body: String = (0..512000).map(|i| format!("{}\n", (i % 7) as f64 * 0.5)).collect();
        fs::write(&p, body).unwrap();
        let ts: TimeSeries<f64> = load_recording(&meta(p, 51200.0)).unwrap();
        assert_eq!(ts.len(), 512000);
        assert!((ts.duration() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn raw_recording_three_samples() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.f32");
        let bytes: Vec<u8> = [1.5f32, -2.0, 0.25].iter().flat_map(|x| x.to_le_bytes()).collect();
        assert_eq!(bytes.len(), 12);
        fs::write(&p, bytes).unwrap();
        fs::write(sidecar_path(&p), "fs_hz = 100\nn_samples = 3\n").unwrap();
        let ts: TimeSeries<f64> = load_recording(&meta(p.clone(), 100.0)).unwrap();
        assert_eq!(ts.samples(), &[1.5, -2.0, 0.25]);

        fs::write(sidecar_path(&p), "fs_hz = 100\nn_samples = 4\n").unwrap();
        assert!(load_recording::<f64>(&meta(p.clone(), 100.0)).is_err());
        fs::write(sidecar_path(&p), "fs_hz = 200\nn_samples = 3\n").unwrap();
        assert!(load_recording::<f64>(&meta(p, 100.0)).is_err());
    }

    #[test]
    fn nan_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.txt");
        fs::write(&p, "0.1\n0.2\nNaN\n").unwrap();
        let err = load_recording::<f64>(&meta(p.clone(), 10.0)).unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");
        fs::write(&p, "0.1\nabc\n").unwrap();
        assert!(load_recording::<f64>(&meta(p.clone(), 10.0)).unwrap_err().to_string().contains("row 2"));
        fs::write(&p, "inf\n").unwrap();
        assert!(load_recording::<f64>(&meta(p, 10.0)).is_err());
    }

    fn small_spec() -> SurrogateSpec {
        SurrogateSpec { duration_s: 3.5, seed: 11, ..SurrogateSpec::default() }
    }

    #[test]
    fn surrogate_corpus_and_features() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small_spec();
        let m = synth_surrogate_corpus(&spec, dir.path()).unwrap();
        assert_eq!(m.len(), 14);
        let reloaded = load_manifest(&dir.path().join("manifest.csv")).unwrap();
        assert_eq!(reloaded.entries, m.entries);

        let design = design_from_thickness(0.50).unwrap();
        let params = PipelineParams { segment_s: 1.0, segments_per_recording: 3, period: 1.0, r_ohm: 1.0 };
        let feats = build_feature_set(&reloaded, &design, &params).unwrap();
        assert_eq!(feats.len(), 42);
        for (i, f) in feats.iter().enumerate() {
            let e = &reloaded.entries[i / 3];
            assert_eq!(f.recording_id, e.id);
            assert_eq!(f.label, e.label);
            assert_eq!(f.segment_index, i % 3);
            assert_eq!(f.feature.dim(), 1);
        }
        let again = build_feature_set(&reloaded, &design, &params).unwrap();
        assert_eq!(feats, again);
        assert!(build_feature_set(&Manifest::default(), &design, &params).unwrap().is_empty());
    }

    #[test]
    fn surrogate_is_byte_deterministic() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let spec = SurrogateSpec { duration_s: 0.5, ..small_spec() };
        synth_surrogate_corpus(&spec, a.path()).unwrap();
        synth_surrogate_corpus(&spec, b.path()).unwrap();
        let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert_eq!(names.len(), 14 * 2 + 1);
        for n in names {
            assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap());
        }
    }

    #[test]
    fn surrogate_text_format() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = SurrogateSpec { duration_s: 0.1, format: RecordingFormat::Text, ..small_spec() };
        spec.classes[0].count = 2;
        spec.classes[1].count = 1;
        let m = synth_surrogate_corpus(&spec, dir.path()).unwrap();
        assert_eq!(m.len(), 3);
        let ts: TimeSeries<f64> = load_recording(&m.entries[0]).unwrap();
        assert_eq!(ts.len(), 5120);
    }

    #[test]
    fn surrogate_spec_from_toml() {
        let spec = SurrogateSpec::from_toml_str(
            r#"
            fs_hz = 8000
            duration_s = 2
            seed = 3
            format = "text"

            [[class]]
            label = "healthy"
            count = 4
            tones = [[60.0, 1.0], [400.0, 0.5]]

            [[class]]
            label = "outer_crack"
            noise_sigma = 0.2
            bands = [{ lo_hz = 100, hi_hz = 120, step_hz = 10, amplitude = 0.1 }]
            "#,
        )
        .unwrap();
        assert_eq!(spec.classes.len(), 2);
        assert_eq!(spec.classes[1].count, 7);
        assert_eq!(spec.classes[1].tone_list(), vec![(100.0, 0.1), (110.0, 0.1), (120.0, 0.1)]);
        assert!(SurrogateSpec::from_toml_str("[[class]]\nlabel = \"ballcrak\"\n").is_err());
        assert!(SurrogateSpec::from_toml_str("fs_hz = 100\n[[class]]\nlabel = \"healthy\"\ntones = [[60.0, 1.0]]\n").is_err());
    }

    #[test]
    fn surrogate_unwritable_directory() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "x").unwrap();
        assert!(synth_surrogate_corpus(&small_spec(), &file.join("sub")).is_err());
    }
}
