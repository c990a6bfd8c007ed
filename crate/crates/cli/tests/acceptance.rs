//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs without the libtest harness so the lines always print:
//!
//! ```text
//! cargo test -p peh-cli --test acceptance
//! ```
//!
//! Criterion 7 needs the HUST bearing recordings converted to a manifest
//! (see the README). Point `PEH_HUST_MANIFEST` at that `manifest.csv` to run
//! it. Without it the criterion prints SKIP and criterion 6, the same
//! pipeline on the seeded synthetic corpus, stands in for it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use peh_core::classify::knn_fit;
use peh_core::config::RunConfig;
use peh_core::dataset::{synth_surrogate_corpus, StateLabel, SurrogateSpec};
use peh_core::frontend::integrate_energy;
use peh_core::peh::{frf_magnitude, half_power_points, measured_gain, simulate_voltage, DesignTable, PehDesign};
use peh_core::report::{run_classify, thought_experiment};
use peh_core::signal::{band_energy_digital, fft_magnitude, synth_composite, synth_sine};
use peh_core::Unit;

const HUST_ENV: &str = "PEH_HUST_MANIFEST";

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64, o: Outcome) -> Outcome {
    let t = elapsed.as_secs_f64();
    match o {
        Outcome::Pass(d) if t >= limit_s => Outcome::Fail(format!("{d}; took {t:.2} s, limit {limit_s} s")),
        Outcome::Pass(d) => Outcome::Pass(format!("{d} ({t:.2} s)")),
        other => other,
    }
}

fn timed(limit_s: f64, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let o = f();
    within(start.elapsed(), limit_s, o)
}

fn analytic_integration() -> Outcome {
    timed(1.0, || {
        let v = synth_sine(200.0f64, 1.0, 0.0, 51200.0, 3.0).unwrap().relabel(Unit::Volts);
        let y = integrate_energy(&v, 3.0, 1.0).unwrap().y[0];
        let rel = (y - 1.5).abs() / 1.5;
        check(rel <= 1e-3, format!("y = {y:.6} J vs 1.5 J, rel err {rel:.2e}"))
    })
}

fn frf_fidelity() -> Outcome {
    timed(10.0, || {
        let fs = 51200.0;
        let mut worst_gain = 0.0f64;
        let mut worst_edge = 0.0f64;
        for d in DesignTable::<f64>::default().designs() {
            for f in [d.f0 - 5.0, d.f0, d.f0 + 5.0] {
                let g = measured_gain(d, fs, f).unwrap();
                let h = frf_magnitude(d, f);
                worst_gain = worst_gain.max((g - h).abs() / h);
            }
            let (lo, hi) = half_power_points(d, fs);
            worst_edge = worst_edge.max((lo - (d.f0 - 5.0)).abs()).max((hi - (d.f0 + 5.0)).abs());
        }
        check(
            worst_gain <= 0.02 && worst_edge <= 0.5,
            format!("worst gain error {:.3}%, worst 3-dB edge offset {worst_edge:.3} Hz", worst_gain * 100.0),
        )
    })
}

fn two_tone_ordering() -> Outcome {
    timed(5.0, || {
        let d = |f0: f64| PehDesign::new(format!("{f0}"), 0.0, f0, 10.0, 1.0, 1.0).unwrap();
        // designs [200, 150]; inputs [200 Hz, 150 Hz]
        let te = thought_experiment(200.0, 150.0, [d(200.0), d(150.0)], 3.0, 1.0, 51200.0).unwrap();
        let r200 = te.energy[0][0] / te.energy[0][1];
        let r150 = te.energy[1][1] / te.energy[1][0];
        check(r200 >= 20.0 && r150 >= 20.0, format!("200 Hz input ratio {r200:.1}, 150 Hz input ratio {r150:.1}"))
    })
}

/// Sorts every index by (distance, index) and votes over the first k.
fn brute_force(points: &[(Vec<f64>, u8)], k: usize, q: &[f64]) -> u8 {
    let mut idx: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, (x, _))| (x.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(), i))
        .collect();
    idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let near = &idx[..k];
    let mut votes: BTreeMap<u8, usize> = BTreeMap::new();
    for &(_, i) in near {
        *votes.entry(points[i].1).or_default() += 1;
    }
    let top = *votes.values().max().unwrap();
    near.iter().map(|&(_, i)| points[i].1).find(|l| votes[l] == top).unwrap()
}

fn knn_oracle() -> Outcome {
    timed(5.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut queries = 0;
        for inst in 0..100 {
            let n = rng.random_range(1..=100);
            let dim = rng.random_range(1..=5);
            let k = rng.random_range(1..=n.min(7));
            // integer grid on half the instances to force distance ties
            let grid = inst % 2 == 0;
            let coord = |rng: &mut ChaCha8Rng| {
                if grid {
                    rng.random_range(0..4) as f64
                } else {
                    rng.random_range(-1.0..1.0)
                }
            };
            let points: Vec<(Vec<f64>, u8)> =
                (0..n).map(|_| ((0..dim).map(|_| coord(&mut rng)).collect(), rng.random_range(0..3))).collect();
            let model = knn_fit(points.clone(), k).unwrap();
            for _ in 0..20 {
                let q: Vec<f64> = (0..dim).map(|_| coord(&mut rng)).collect();
                queries += 1;
                let (got, want) = (model.predict(&q).unwrap(), brute_force(&points, k, &q));
                if got != want {
                    return Outcome::Fail(format!("instance {inst}: predicted {got}, oracle {want}"));
                }
            }
        }
        Outcome::Pass(format!("100 instances, {queries} queries, all agree"))
    })
}

fn parseval_and_baseline() -> Outcome {
    let noise = synth_composite::<f64>(&[], 1.0, 51200.0, 3.0, 11).unwrap();
    let time = noise.energy(1.0);
    let spec = fft_magnitude(&noise).unwrap().total_sum_squares() / 51200.0;
    let parseval = (time - spec).abs() / time;

    let table = DesignTable::<f64>::default();
    let d = table.lookup("0.50").unwrap();
    let u = synth_sine(d.f0, 0.7, 0.0, 51200.0, 3.0).unwrap();
    let analog = integrate_energy(&simulate_voltage(d, &u).unwrap(), 3.0, d.r_ohm).unwrap().y[0];
    let digital = band_energy_digital(&u, d.f0 - d.bw3db / 2.0, d.f0 + d.bw3db / 2.0, d.r_ohm).unwrap()
        * d.peak_gain
        * d.peak_gain;
    let baseline = (analog - digital).abs() / digital;
    check(
        parseval <= 1e-6 && baseline <= 0.05,
        format!("Parseval rel err {parseval:.2e}; in-band analog vs digital baseline {:.2}%", baseline * 100.0),
    )
}

fn classify_config(manifest: PathBuf, design: &str, labels: Vec<StateLabel>) -> RunConfig {
    RunConfig {
        manifest: Some(manifest),
        designs: vec![design.into()],
        t_s: 3.0,
        k: 3,
        repeats: 20,
        train_fraction: 0.8,
        labels,
        ..RunConfig::default()
    }
}

fn surrogate_end_to_end(tmp: &Path) -> Outcome {
    timed(60.0, || {
        let data = tmp.join("c6");
        synth_surrogate_corpus(&SurrogateSpec::default(), &data).unwrap();
        let cfg = classify_config(data.join("manifest.csv"), "0.50", vec![]);
        let s = &run_classify(&cfg, &tmp.join("c6-out")).unwrap()[0];
        check(
            s.mean_accuracy >= 0.85,
            format!("mean accuracy {:.4} ± {:.4} over {} splits", s.mean_accuracy, s.std_accuracy, s.repeats),
        )
    })
}

fn dataset_reproduction(tmp: &Path) -> Outcome {
    let Some(manifest) = std::env::var_os(HUST_ENV) else {
        return Outcome::Skip(format!("{HUST_ENV} not set; dataset absent, criterion 6 substitutes"));
    };
    let cfg = classify_config(PathBuf::from(manifest), "0.45", vec![StateLabel::Healthy, StateLabel::BallCrack]);
    match run_classify(&cfg, &tmp.join("c7-out")) {
        Ok(s) => {
            let acc = s[0].mean_accuracy;
            check((acc - 0.89).abs() <= 0.07, format!("mean accuracy {acc:.4} vs 0.89 ± 0.07"))
        }
        Err(e) => Outcome::Fail(format!("pipeline error: {e}")),
    }
}

fn peh(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_peh")).args(args).output().expect("run peh")
}

fn sampling_report() -> Outcome {
    let out = peh(&["energy-report", "--fs-raw", "51200", "--t", "3"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let ok = out.status.success() && text.contains("reduction ratio:      153600\n") && text.contains("0.33 samples/s");
    check(ok, "ratio 153600 and feature rate 0.33 samples/s printed".into())
}

fn reruns_identical(tmp: &Path) -> Outcome {
    let data = tmp.join("c9");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let gen = peh(&["--out", &s(&data), "--seed", "5", "surrogate-gen", "--count", "4", "--duration", "9"]);
    if !gen.status.success() {
        return Outcome::Fail(format!("surrogate-gen failed: {}", String::from_utf8_lossy(&gen.stderr)));
    }
    let manifest = s(&data.join("manifest.csv"));
    let mut compared = 0;
    for (cmd, files) in [("extract", &["features.csv"][..]), ("classify", &["classify.csv", "confusion.csv"][..])] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let dir = tmp.join(format!("c9-{cmd}-{run}"));
            let mut args = vec!["--out".to_string(), s(&dir), "--seed".into(), "7".into(), cmd.into()];
            args.extend(["--manifest".into(), manifest.clone()]);
            if cmd == "classify" {
                args.extend(["--repeats".into(), "3".into()]);
            }
            let o = peh(&args.iter().map(String::as_str).collect::<Vec<_>>());
            if !o.status.success() {
                return Outcome::Fail(format!("{cmd} failed: {}", String::from_utf8_lossy(&o.stderr)));
            }
            outputs.push(files.iter().map(|f| std::fs::read(dir.join(f)).unwrap()).collect::<Vec<_>>());
        }
        if outputs[0] != outputs[1] {
            return Outcome::Fail(format!("{cmd} outputs differ between runs"));
        }
        compared += files.len();
    }
    Outcome::Pass(format!("{compared} CSV files byte-identical across reruns"))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("analytic integration", Box::new(analytic_integration)),
        ("FRF fidelity", Box::new(frf_fidelity)),
        ("two-tone harvester ordering", Box::new(two_tone_ordering)),
        ("kNN oracle equivalence", Box::new(knn_oracle)),
        ("Parseval and digital baseline", Box::new(parseval_and_baseline)),
        ("surrogate end-to-end", Box::new(|| surrogate_end_to_end(tmp.path()))),
        ("HUST reproduction", Box::new(|| dataset_reproduction(tmp.path()))),
        ("sampling-reduction report", Box::new(sampling_report)),
        ("rerun determinism", Box::new(|| reruns_identical(tmp.path()))),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match f() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {}: {tag} {name}: {detail}", i + 1);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
