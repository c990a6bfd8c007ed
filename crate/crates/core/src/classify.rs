//! Stratified holdout splits, k-nearest-neighbour classification and
//! accuracy evaluation.

use std::collections::BTreeMap;
use std::fmt::Display;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{features_from_recordings, load_all, LabeledFeature, Manifest, PipelineParams, StateLabel};
use crate::error::{Error, Result};
use crate::peh::PehDesign;
use crate::scalar::Scalar;

/// Anything that carries a class label.
pub trait Labeled {
    type Label: Ord + Clone + std::fmt::Debug;
    fn label(&self) -> Self::Label;
}

impl<S> Labeled for LabeledFeature<S> {
    type Label = StateLabel;
    fn label(&self) -> StateLabel {
        self.label
    }
}

impl<X, L: Ord + Clone + std::fmt::Debug> Labeled for (X, L) {
    type Label = L;
    fn label(&self) -> L {
        self.1.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_fraction: 0.8, seed: 0, stratified: true }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid(format!("train fraction must lie in (0, 1), got {}", self.train_fraction)));
        }
        Ok(())
    }
}

/// Number of training items out of `n`: `round(fraction·n)` kept within `[1, n-1]`.
fn train_count(n: usize, fraction: f64) -> usize {
    let t = (fraction * n as f64).round() as usize;
    if n >= 2 {
        t.clamp(1, n - 1)
    } else {
        t.min(n)
    }
}

/// Seeded holdout split. When stratified, every class is shuffled on its own
/// (classes in label order) and contributes `round(fraction·n_class)` items
/// to training.
pub fn split<T: Labeled + Clone>(items: &[T], cfg: &SplitConfig) -> Result<(Vec<T>, Vec<T>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut train, mut valid) = (Vec::new(), Vec::new());
    if cfg.stratified {
        let mut groups: BTreeMap<T::Label, Vec<usize>> = BTreeMap::new();
        for (i, it) in items.iter().enumerate() {
            groups.entry(it.label()).or_default().push(i);
        }
        for idx in groups.values() {
            if idx.len() < 2 {
                let label = format!("{:?}", items[idx[0]].label());
                return Err(Error::ClassTooSmall { label, count: idx.len() });
            }
        }
        for mut idx in groups.into_values() {
            idx.shuffle(&mut rng);
            let t = train_count(idx.len(), cfg.train_fraction);
            train.extend(idx[..t].iter().map(|&i| items[i].clone()));
            valid.extend(idx[t..].iter().map(|&i| items[i].clone()));
        }
    } else {
        let mut idx: Vec<usize> = (0..items.len()).collect();
        idx.shuffle(&mut rng);
        let t = train_count(idx.len(), cfg.train_fraction);
        train.extend(idx[..t].iter().map(|&i| items[i].clone()));
        valid.extend(idx[t..].iter().map(|&i| items[i].clone()));
    }
    Ok((train, valid))
}

/// Feature-space transform applied before Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    /// Euclidean on `ln x`, with zeros clamped to the smallest positive normal.
    LogEuclidean,
}

impl Metric {
    fn map<S: Scalar>(self, x: S) -> S {
        match self {
            Metric::Euclidean => x,
            Metric::LogEuclidean => x.max(S::min_positive_value()).ln(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::LogEuclidean => "log_euclidean",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "log_euclidean" | "log" => Ok(Metric::LogEuclidean),
            other => Err(Error::invalid(format!("unknown metric {other:?}"))),
        }
    }
}

/// Lazy kNN learner: stores the training points verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel<S, L> {
    k: usize,
    metric: Metric,
    points: Vec<(Vec<S>, L)>,
    dim: usize,
}

impl<S: Scalar, L: Ord + Clone> KnnModel<S, L> {
    pub fn fit(points: Vec<(Vec<S>, L)>, k: usize) -> Result<Self> {
        Self::fit_with_metric(points, k, Metric::Euclidean)
    }

    pub fn fit_with_metric(points: Vec<(Vec<S>, L)>, k: usize, metric: Metric) -> Result<Self> {
        if k == 0 || k > points.len() {
            return Err(Error::invalid(format!("k = {k} outside [1, {}]", points.len())));
        }
        let dim = points[0].0.len();
        if let Some((bad, _)) = points.iter().find(|(x, _)| x.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
        }
        let points = points
            .into_iter()
            .map(|(x, l)| (x.into_iter().map(|v| metric.map(v)).collect(), l))
            .collect();
        Ok(Self { k, metric, points, dim })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of the `k` nearest training points, nearest first; equal
    /// distances resolve to the lower index.
    pub fn neighbors(&self, query: &[S]) -> Result<Vec<usize>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: query.len() });
        }
        let q: Vec<S> = query.iter().map(|&v| self.metric.map(v)).collect();
        let mut d: Vec<(S, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, (x, _))| (squared_distance(x, &q), i))
            .collect();
        let by_dist = |a: &(S, usize), b: &(S, usize)| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1));
        d.select_nth_unstable_by(self.k - 1, by_dist);
        d.truncate(self.k);
        d.sort_by(by_dist);
        Ok(d.into_iter().map(|(_, i)| i).collect())
    }

    /// Majority label of the `k` nearest points. A tie in votes goes to the
    /// tied label whose member is nearest.
    pub fn predict(&self, query: &[S]) -> Result<L> {
        let nn = self.neighbors(query)?;
        let mut votes: BTreeMap<&L, usize> = BTreeMap::new();
        for &i in &nn {
            *votes.entry(&self.points[i].1).or_insert(0) += 1;
        }
        let best = votes.values().copied().max().unwrap_or(0);
        let winner = nn
            .iter()
            .map(|&i| &self.points[i].1)
            .find(|l| votes[l] == best)
            .expect("k >= 1");
        Ok(winner.clone())
    }
}

fn squared_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

pub fn knn_fit<S: Scalar, L: Ord + Clone>(train: Vec<(Vec<S>, L)>, k: usize) -> Result<KnnModel<S, L>> {
    KnnModel::fit(train, k)
}

pub fn knn_predict<S: Scalar, L: Ord + Clone>(model: &KnnModel<S, L>, feature: &[S]) -> Result<L> {
    model.predict(feature)
}

/// Outcome of one validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<L> {
    pub accuracy: f64,
    /// Sorted label set indexing both axes of `confusion`.
    pub labels: Vec<L>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub design: String,
    pub period_s: f64,
    pub k: usize,
    pub seed: u64,
}

impl<L: Ord + Clone> EvalReport<L> {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.labels.len()).map(|i| self.confusion[i][i]).sum()
    }

    /// `trace / sum` of the confusion matrix.
    pub fn accuracy_from_confusion(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }
}

/// Predicts every validation point and tallies the confusion matrix.
pub fn evaluate<S: Scalar, L: Ord + Clone>(
    model: &KnnModel<S, L>,
    validation: &[(Vec<S>, L)],
) -> Result<EvalReport<L>> {
    if validation.is_empty() {
        return Err(Error::EmptyInput("validation set"));
    }
    let predicted = validation.iter().map(|(x, _)| model.predict(x)).collect::<Result<Vec<_>>>()?;
    let mut labels: Vec<L> = validation.iter().map(|(_, l)| l.clone()).chain(predicted.iter().cloned()).collect();
    labels.sort();
    labels.dedup();
    let pos = |l: &L| labels.binary_search(l).expect("label collected above");
    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    for ((_, truth), pred) in validation.iter().zip(&predicted) {
        confusion[pos(truth)][pos(pred)] += 1;
    }
    let correct: usize = (0..labels.len()).map(|i| confusion[i][i]).sum();
    Ok(EvalReport {
        accuracy: correct as f64 / validation.len() as f64,
        labels,
        confusion,
        design: String::new(),
        period_s: f64::NAN,
        k: model.k(),
        seed: 0,
    })
}

fn as_points<S: Scalar>(fs: &[LabeledFeature<S>]) -> Vec<(Vec<S>, StateLabel)> {
    fs.iter().map(|f| (f.feature.values.clone(), f.label)).collect()
}

/// One split/fit/evaluate round on a labelled feature set.
pub fn holdout_once<S: Scalar>(
    features: &[LabeledFeature<S>],
    k: usize,
    metric: Metric,
    split_cfg: &SplitConfig,
) -> Result<EvalReport<StateLabel>> {
    let (train, valid) = split(features, split_cfg)?;
    let model = KnnModel::fit_with_metric(as_points(&train), k, metric)?;
    let mut report = evaluate(&model, &as_points(&valid))?;
    if let Some(f) = features.first() {
        report.design = f.feature.design_name.clone();
        report.period_s = f.feature.period.as_f64();
    }
    report.seed = split_cfg.seed;
    Ok(report)
}

/// `n_repeats` holdout rounds with seeds `seed, seed+1, ...`.
pub fn repeated_holdout<S: Scalar>(
    features: &[LabeledFeature<S>],
    k: usize,
    metric: Metric,
    split_cfg: &SplitConfig,
    n_repeats: usize,
) -> Result<Vec<EvalReport<StateLabel>>> {
    if n_repeats == 0 {
        return Err(Error::invalid("n_repeats must be at least 1"));
    }
    (0..n_repeats)
        .map(|i| {
            let cfg = SplitConfig { seed: split_cfg.seed.wrapping_add(i as u64), ..*split_cfg };
            holdout_once(features, k, metric, &cfg)
        })
        .collect()
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// How the integration period relates to segmentation in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    /// Segments stay fixed; a shorter `T` yields more feature dimensions.
    #[default]
    FixedSegment,
    /// Segment length follows `T`, features stay scalar, and the number of
    /// segments is `floor(segment_s·segments_per_recording / T)`.
    SegmentEqualsPeriod,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_segment" => Ok(SweepMode::FixedSegment),
            "segment_equals_t" => Ok(SweepMode::SegmentEqualsPeriod),
            other => Err(Error::invalid(format!("unknown sweep mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig<S> {
    pub segment_s: S,
    pub segments_per_recording: usize,
    /// Overrides each design's own load resistance when set.
    pub r_ohm: Option<S>,
    pub k: usize,
    pub metric: Metric,
    pub split: SplitConfig,
    pub n_repeats: usize,
    pub mode: SweepMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub design: String,
    pub thickness_mm: f64,
    pub period_s: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub n_repeats: usize,
    pub seed0: u64,
}

impl SweepRow {
    pub const CSV_HEADER: [&'static str; 7] =
        ["design", "thickness_mm", "T_s", "mean_accuracy", "std_accuracy", "n_repeats", "seed0"];

    pub fn csv_record(&self) -> [String; 7] {
        [
            self.design.clone(),
            self.thickness_mm.to_string(),
            self.period_s.to_string(),
            self.mean_accuracy.to_string(),
            self.std_accuracy.to_string(),
            self.n_repeats.to_string(),
            self.seed0.to_string(),
        ]
    }
}

pub(crate) fn params_for<S: Scalar>(cfg: &SweepConfig<S>, design: &PehDesign<S>, period: S) -> PipelineParams<S> {
    let r_ohm = cfg.r_ohm.unwrap_or(design.r_ohm);
    match cfg.mode {
        SweepMode::FixedSegment => PipelineParams {
            segment_s: cfg.segment_s,
            segments_per_recording: cfg.segments_per_recording,
            period,
            r_ohm,
        },
        SweepMode::SegmentEqualsPeriod => {
            let usable = cfg.segment_s * S::from_usize_lossy(cfg.segments_per_recording);
            // small slack so that e.g. 9 s / 3 s is not floored to 2
            let n = ((usable / period) + S::lit(1e-9)).floor().to_usize().unwrap_or(0);
            PipelineParams { segment_s: period, segments_per_recording: n, period, r_ohm }
        }
    }
}

/// Mean ± std accuracy for every (design, T) pair; recordings are loaded once.
pub fn accuracy_sweep<S: Scalar>(
    manifest: &Manifest,
    designs: &[PehDesign<S>],
    periods: &[S],
    cfg: &SweepConfig<S>,
) -> Result<Vec<SweepRow>> {
    let recordings = load_all::<S>(manifest)?;
    let mut rows = Vec::with_capacity(designs.len() * periods.len());
    for design in designs {
        for &period in periods {
            let params = params_for(cfg, design, period);
            if params.segments_per_recording == 0 {
                return Err(Error::invalid(format!("period {period} s leaves no whole segment")));
            }
            let features = features_from_recordings(manifest, &recordings, design, &params)?;
            let reports = repeated_holdout(&features, cfg.k, cfg.metric, &cfg.split, cfg.n_repeats)?;
            let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
            let (mean, std) = mean_std(&acc);
            rows.push(SweepRow {
                design: design.name.clone(),
                thickness_mm: design.thickness_mm.as_f64(),
                period_s: period.as_f64(),
                mean_accuracy: mean,
                std_accuracy: std,
                n_repeats: cfg.n_repeats,
                seed0: cfg.split.seed,
            });
        }
    }
    Ok(rows)
}

/// Renders a confusion matrix as `true_label,predicted_label,count` rows.
pub fn confusion_rows<L: Display>(labels: &[L], confusion: &[Vec<usize>]) -> Vec<[String; 3]> {
    let mut out = Vec::new();
    for (i, t) in labels.iter().enumerate() {
        for (j, p) in labels.iter().enumerate() {
            out.push([t.to_string(), p.to_string(), confusion[i][j].to_string()]);
        }
    }
    out
}
