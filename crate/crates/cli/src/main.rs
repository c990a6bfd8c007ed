//! `peh`: energy-harvester fault detection experiments from the command line.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 data error,
//! 4 I/O error, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use peh_core::config::RunConfig;
use peh_core::dataset::{write_file, SurrogateSpec};
use peh_core::report::{self, EnergyCostModel};
use peh_core::{ErrorKind, PehDesign, StateLabel};

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "peh", version, about = "Bearing fault detection with piezoelectric energy harvesters as analog filters")]
struct Cli {
    /// Run configuration (flat TOML, keys as in the README).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/SVG artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed for splits and synthesis.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two tones through two harvesters: which one collects more energy?
    ThoughtExperiment(ThoughtArgs),
    /// Write per-segment energy features to features.csv.
    Extract(RunArgs),
    /// Repeated holdout kNN; writes classify.csv and confusion.csv.
    Classify(ClassifyArgs),
    /// Accuracy over designs and integration periods; writes sweep.csv and sweep.svg.
    Sweep(SweepArgs),
    /// Mean faulty vs healthy energy per design; writes scatter.csv and scatter.svg.
    Scatter(RunArgs),
    /// Sample-rate and ADC/radio energy comparison, raw vs energy features.
    EnergyReport(EnergyArgs),
    /// Generate a synthetic labelled corpus with a manifest.
    SurrogateGen(SurrogateArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Manifest CSV, overriding the config.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Design by name or thickness; repeatable. Default: every design.
    #[arg(long = "design")]
    designs: Vec<String>,
    /// Integration period in seconds.
    #[arg(long = "t")]
    t_s: Option<f64>,
    /// Load resistance in ohm.
    #[arg(long)]
    r_ohm: Option<f64>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// euclidean or log_euclidean.
    #[arg(long)]
    metric: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Periods to visit, comma separated.
    #[arg(long, value_delimiter = ',')]
    t_values: Vec<f64>,
    /// fixed_segment or segment_equals_t.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
}

#[derive(Debug, Args)]
struct ThoughtArgs {
    #[arg(long, default_value_t = 200.0)]
    f_healthy: f64,
    #[arg(long, default_value_t = 150.0)]
    f_faulty: f64,
    /// Resonance of the first harvester.
    #[arg(long, default_value_t = 200.0)]
    f0_a: f64,
    /// Resonance of the second harvester.
    #[arg(long, default_value_t = 150.0)]
    f0_b: f64,
    #[arg(long, default_value_t = 10.0)]
    bw: f64,
    #[arg(long = "t", default_value_t = 3.0)]
    t_s: f64,
    #[arg(long, default_value_t = 1.0)]
    r_ohm: f64,
    /// Internal synthesis rate.
    #[arg(long, default_value_t = 51200.0)]
    fs: f64,
}

#[derive(Debug, Args)]
struct EnergyArgs {
    #[arg(long, default_value_t = 51200.0)]
    fs_raw: f64,
    #[arg(long = "t", default_value_t = 3.0)]
    t_s: f64,
    /// Joules per ADC conversion.
    #[arg(long)]
    e_adc: Option<f64>,
    /// Joules to transmit one sample.
    #[arg(long)]
    e_tx: Option<f64>,
    #[arg(long)]
    bits: Option<u32>,
}

#[derive(Debug, Args)]
struct SurrogateArgs {
    /// TOML corpus spec; default is the built-in healthy/ball-crack corpus.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Recordings per class, overriding the spec.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    duration: Option<f64>,
    /// Write text recordings instead of raw f32.
    #[arg(long)]
    text: bool,
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn apply_run(cfg: &mut RunConfig, a: &RunArgs) {
    if let Some(m) = &a.manifest {
        cfg.manifest = Some(m.clone());
    }
    if !a.designs.is_empty() {
        cfg.designs = a.designs.clone();
    }
    if let Some(t) = a.t_s {
        cfg.t_s = t;
    }
    if a.r_ohm.is_some() {
        cfg.r_ohm = a.r_ohm;
    }
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("peh-out"))
}

fn save(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| peh_core::Error::io(dir, e))?;
    write_file(&dir.join(name), text)?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::ThoughtExperiment(a) => {
            let design = |f0: f64| PehDesign::new(format!("peh@{f0}Hz"), 0.0, f0, a.bw, 1.0, a.r_ohm);
            let te = report::thought_experiment(a.f_healthy, a.f_faulty, [design(a.f0_a)?, design(a.f0_b)?], a.t_s, a.r_ohm, a.fs)?;
            print!("{}", te.render());
            if let Some(dir) = &cfg.out {
                save(dir, "thought_experiment.csv", &te.csv())?;
            }
        }
        Command::Extract(a) => {
            apply_run(&mut cfg, a);
            let dir = out_dir(&cfg);
            let o = report::run_extract(&cfg, &dir)?;
            println!("wrote {} feature rows to {}", o.rows, o.path.display());
        }
        Command::Classify(a) => {
            apply_run(&mut cfg, &a.run);
            if let Some(k) = a.k {
                cfg.k = k;
            }
            if let Some(r) = a.repeats {
                cfg.repeats = r;
            }
            if let Some(m) = &a.metric {
                cfg.metric = m.clone();
            }
            for s in report::run_classify(&cfg, &out_dir(&cfg))? {
                print!("{}", s.render());
            }
        }
        Command::Sweep(a) => {
            apply_run(&mut cfg, &a.run);
            if !a.t_values.is_empty() {
                cfg.t_values = a.t_values.clone();
            }
            if let Some(m) = &a.mode {
                cfg.sweep_mode = m.clone();
            }
            if let Some(r) = a.repeats {
                cfg.repeats = r;
            }
            for r in report::run_sweep(&cfg, &out_dir(&cfg))? {
                println!("{:>14} T={:<6} accuracy {:.4} ± {:.4}", r.design, r.period_s, r.mean_accuracy, r.std_accuracy);
            }
        }
        Command::Scatter(a) => {
            apply_run(&mut cfg, a);
            for p in report::run_scatter(&cfg, &out_dir(&cfg))? {
                println!(
                    "{:>14} {}={:.4e} J {}={:.4e} J distance {:.4e}",
                    p.design, cfg.healthy_label, p.mean_healthy, cfg.faulty_label, p.mean_faulty, p.distance_to_diagonal
                );
            }
        }
        Command::EnergyReport(a) => {
            let mut cost = EnergyCostModel::default();
            if let Some(e) = a.e_adc {
                cost.e_adc_per_sample = e;
            }
            if let Some(e) = a.e_tx {
                cost.e_tx_per_sample = e;
            }
            if let Some(b) = a.bits {
                cost.bits_per_sample = b;
            }
            let r = report::energy_report(a.fs_raw, a.t_s, &cost)?;
            print!("{}", r.render());
            if let Some(dir) = &cfg.out {
                save(dir, "energy_report.csv", &r.csv())?;
            }
        }
        Command::SurrogateGen(a) => {
            let mut spec = match &a.spec {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| peh_core::Error::io(p, e))?;
                    SurrogateSpec::from_toml_str(&text)
                        .map_err(|e| peh_core::Error::ConfigFile { path: p.clone(), message: e.to_string() })?
                }
                None => SurrogateSpec::default(),
            };
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            if let Some(n) = a.count {
                spec.classes.iter_mut().for_each(|c| c.count = n);
            }
            if let Some(d) = a.duration {
                spec.duration_s = d;
            }
            if a.text {
                spec.format = peh_core::dataset::RecordingFormat::Text;
            }
            let dir = out_dir(&cfg);
            let m = report::run_surrogate_gen(&spec, &dir)?;
            let mut per_label: Vec<(StateLabel, usize)> = Vec::new();
            for e in &m.entries {
                match per_label.iter_mut().find(|(l, _)| *l == e.label) {
                    Some((_, n)) => *n += 1,
                    None => per_label.push((e.label, 1)),
                }
            }
            for (l, n) in per_label {
                println!("{l}: {n} recordings");
            }
            println!("manifest: {}", dir.join("manifest.csv").display());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<peh_core::Error>().map(|e| e.kind()) {
        Some(ErrorKind::Config) => EXIT_CONFIG,
        Some(ErrorKind::Data) => EXIT_DATA,
        Some(ErrorKind::Io) => EXIT_IO,
        None if err.downcast_ref::<std::io::Error>().is_some() => EXIT_IO,
        None => EXIT_OTHER,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // core errors already carry their cause in the message
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
