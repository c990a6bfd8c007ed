use peh_core::classify::{repeated_holdout, mean_std, Metric, SplitConfig};
use peh_core::config::RunConfig;
use peh_core::dataset::{build_feature_set, load_manifest, synth_surrogate_corpus, ClassSpec, PipelineParams, StateLabel, SurrogateSpec};
use peh_core::frontend::mean_state_energy;
use peh_core::peh::DesignTable;
use peh_core::report::{run_extract, run_scatter};

fn params(r: f64) -> PipelineParams<f64> {
    PipelineParams { segment_s: 3.0, segments_per_recording: 3, period: 3.0, r_ohm: r }
}

#[test]
fn surrogate_separates_in_the_thickest_design() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_surrogate_corpus(&SurrogateSpec::default(), dir.path()).unwrap();
    assert_eq!(manifest.len(), 14);
    let reloaded = load_manifest(&dir.path().join("manifest.csv")).unwrap();
    assert_eq!(reloaded.entries, manifest.entries);

    let table = DesignTable::<f64>::default();
    let d = table.lookup("0.50").unwrap();
    let feats = build_feature_set(&manifest, d, &params(d.r_ohm)).unwrap();
    assert_eq!(feats.len(), 42);
    assert!(feats.iter().all(|f| f.feature.dim() == 1 && f.feature.values[0] >= 0.0));

    let means = mean_state_energy(feats.iter().map(|f| (&f.feature, &f.label))).unwrap();
    let ratio = means[&StateLabel::BallCrack] / means[&StateLabel::Healthy];
    assert!(ratio >= 3.0, "separation ratio {ratio}");

    let split = SplitConfig { train_fraction: 0.8, seed: 0, stratified: true };
    let reports = repeated_holdout(&feats, 3, Metric::Euclidean, &split, 10).unwrap();
    let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    let (mean, _) = mean_std(&acc);
    assert!(mean >= 0.85, "mean accuracy {mean}");
    for r in &reports {
        assert_eq!(r.total(), 8);
        assert_eq!(r.accuracy, r.accuracy_from_confusion());
    }
}

#[test]
fn gain_scaling_scales_energy_and_keeps_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SurrogateSpec { duration_s: 3.0, ..SurrogateSpec::default() };
    for c in &mut spec.classes {
        c.count = 5;
    }
    let manifest = synth_surrogate_corpus(&spec, dir.path()).unwrap();
    let d = DesignTable::<f64>::default().lookup("0.45").unwrap().clone();
    let p = PipelineParams { segment_s: 1.0, segments_per_recording: 3, period: 0.5, r_ohm: 1.0 };
    let base = build_feature_set(&manifest, &d, &p).unwrap();
    let c = 4.0;
    let loud = build_feature_set(&manifest, &d.scaled(c), &p).unwrap();
    for (a, b) in base.iter().zip(&loud) {
        for (x, y) in a.feature.values.iter().zip(&b.feature.values) {
            assert!((y - c * c * x).abs() <= 1e-9 * y.max(1e-300));
        }
    }
    let split = SplitConfig { train_fraction: 0.8, seed: 9, stratified: true };
    let r1 = repeated_holdout(&base, 3, Metric::Euclidean, &split, 5).unwrap();
    let r2 = repeated_holdout(&loud, 3, Metric::Euclidean, &split, 5).unwrap();
    for (a, b) in r1.iter().zip(&r2) {
        assert_eq!(a.confusion, b.confusion);
    }
}

#[test]
fn symmetric_classes_sit_on_the_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let class = |label| ClassSpec {
        label,
        count: 3,
        tones: vec![[150.0, 0.5], [200.0, 0.5]],
        bands: vec![],
        noise_sigma: 0.1,
        gain_jitter: 0.0,
        seed: Some(42),
    };
    let spec = SurrogateSpec {
        duration_s: 3.0,
        classes: vec![class(StateLabel::Healthy), class(StateLabel::BallCrack)],
        ..SurrogateSpec::default()
    };
    synth_surrogate_corpus(&spec, &dir.path().join("data")).unwrap();
    let cfg = RunConfig {
        manifest: Some(dir.path().join("data/manifest.csv")),
        segment_s: 1.0,
        t_s: 1.0,
        ..RunConfig::default()
    };
    let points = run_scatter(&cfg, &dir.path().join("out")).unwrap();
    assert_eq!(points.len(), 4);
    for p in &points {
        assert!(p.distance_to_diagonal <= 1e-12 * p.mean_healthy, "{p:?}");
    }
    assert!(dir.path().join("out/scatter.svg").exists());
}

#[test]
fn default_surrogate_puts_thickest_design_farthest_from_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    synth_surrogate_corpus(&SurrogateSpec::default(), &dir.path().join("data")).unwrap();
    let cfg = RunConfig { manifest: Some(dir.path().join("data/manifest.csv")), ..RunConfig::default() };
    let points = run_scatter(&cfg, &dir.path().join("out")).unwrap();
    let far = points.iter().max_by(|a, b| a.distance_to_diagonal.total_cmp(&b.distance_to_diagonal)).unwrap();
    assert_eq!(far.thickness_mm, 0.50);
    let csv = std::fs::read_to_string(dir.path().join("out/scatter.csv")).unwrap();
    assert!(csv.starts_with("design,thickness_mm,mean_healthy_j,mean_faulty_j,distance_to_diagonal\n"));
}

#[test]
fn extract_on_header_only_manifest_writes_header_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("manifest.csv");
    std::fs::write(&m, "path,label,bearing_type,load_w,fs_hz\n").unwrap();
    let cfg = RunConfig { manifest: Some(m), ..RunConfig::default() };
    let err = run_extract(&cfg, &dir.path().join("out")).unwrap_err();
    assert_eq!(err.kind(), peh_core::ErrorKind::Data);
    let csv = std::fs::read_to_string(dir.path().join("out/features.csv")).unwrap();
    assert_eq!(csv, "recording_id,segment_index,label,design,T_s,feature_0\n");
}

#[test]
fn in_band_analog_energy_tracks_digital_baseline() {
    use peh_core::frontend::integrate_energy;
    use peh_core::peh::simulate_voltage;
    use peh_core::signal::{band_energy_digital, synth_sine};
    for d in DesignTable::<f64>::default().designs() {
        let d = d.scaled(1.7);
        let u = synth_sine(d.f0, 0.4, 1.0, 51200.0, 3.0).unwrap();
        let analog = integrate_energy(&simulate_voltage(&d, &u).unwrap(), 3.0, d.r_ohm).unwrap().y[0];
        let digital = band_energy_digital(&u, d.f0 - 5.0, d.f0 + 5.0, d.r_ohm).unwrap() * d.peak_gain * d.peak_gain;
        assert!((analog - digital).abs() / digital <= 0.05, "{}: {analog} vs {digital}", d.name);
    }
}
