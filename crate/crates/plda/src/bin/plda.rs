//! Command-line front end: dataset generation, ORIG/PLDA training,
//! evaluation, theory-validation experiments, and paired comparisons.

use clap::{Args, Parser, Subcommand, ValueEnum};
use plda::detector::{anomaly_scores, Detector};
use plda::error::Error;
use plda::evalgen::{anomaly_pool, best_f1, generate, inject_contamination};
use plda::trainer::{baseline_run, run, RunConfig, RunReport};
use plda::validate;
use plda::windows::TimeSeries;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser)]
#[command(
    name = "plda",
    version,
    about = "Dual parameter-loss data augmentation for time-series anomaly detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic contaminated benchmark dataset.
    Gen(GenArgs),
    /// Train a detector, with (plda) or without (orig) augmentation.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a labeled test series.
    Eval(EvalArgs),
    /// Run the theory-validation experiments.
    Validate(ValidateArgs),
    /// Paired ORIG vs PLDA comparison over the configured seeds.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output directory for train.csv, test.csv, and manifest.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fraction of train points overwritten with anomalous contamination.
    #[arg(long, default_value_t = 0.10)]
    ratio: f64,
}

#[derive(Args)]
struct TrainArgs {
    /// Training series CSV (a label column, if present, is ignored).
    data: PathBuf,
    /// Run configuration TOML; defaults to the tuned benchmark config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory to create the run directory in.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Overrides the first seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Mode::Plda)]
    mode: Mode,
}

#[derive(Args)]
struct EvalArgs {
    /// Detector checkpoint (detector.json from a run directory).
    checkpoint: PathBuf,
    /// Labeled test series CSV.
    data: PathBuf,
    /// Where to write the EvalResult JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Which experiment to run; all of them when omitted.
    #[arg(long, value_enum)]
    which: Option<Which>,
}

#[derive(Args)]
struct CompareArgs {
    /// Dataset directory produced by `plda gen` (train.csv + test.csv).
    data: PathBuf,
    /// Run configuration TOML; defaults to the tuned benchmark config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the comparison summary JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Orig,
    Plda,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Influence,
    Reachability,
    Decay,
    Rewards,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not usage errors
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidArgument(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

#[derive(Serialize)]
struct GenManifest {
    spec: plda::evalgen::SyntheticSpec,
    seed: u64,
    ratio: f64,
    contaminated_points: usize,
}

fn cmd_gen(args: GenArgs) -> plda::Result<()> {
    let spec = validate::default_benchmark_spec();
    let (train, test) = generate(&spec, args.seed)?;
    let pool = anomaly_pool(&test);
    let (contaminated, ac_flags) =
        inject_contamination(&train, &pool, args.ratio, args.seed ^ 0x9e37)?;
    let contaminated_points = ac_flags.iter().filter(|&&f| f == 1).count();
    // AC flags ride along as the train label column for later tracking
    let train_labeled = TimeSeries::new(
        "train",
        contaminated.data().to_vec(),
        contaminated.dim(),
        Some(ac_flags),
    )?;

    std::fs::create_dir_all(&args.out)?;
    plda::io::write_series_csv(&train_labeled, &args.out.join("train.csv"))?;
    plda::io::write_series_csv(&test, &args.out.join("test.csv"))?;
    let manifest = GenManifest {
        spec,
        seed: args.seed,
        ratio: args.ratio,
        contaminated_points,
    };
    serde_json::to_writer_pretty(
        std::fs::File::create(args.out.join("manifest.json"))?,
        &manifest,
    )?;
    println!(
        "gen: wrote {} ({} train points, {} contaminated, {} test points)",
        args.out.display(),
        train_labeled.len(),
        contaminated_points,
        test.len()
    );
    Ok(())
}

fn load_config_or_default(path: &Option<PathBuf>) -> plda::Result<RunConfig> {
    match path {
        Some(p) => plda::io::load_config(p),
        None => Ok(validate::benchmark_config()),
    }
}

/// Strips any label column so training never sees ground truth.
fn load_train_series(path: &Path) -> plda::Result<TimeSeries> {
    let series = plda::io::read_series_csv(path)?;
    TimeSeries::new("train", series.data().to_vec(), series.dim(), None)
}

fn make_run_dir(out: &Path, seed: u64) -> plda::Result<PathBuf> {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .as_secs();
    let mut dir = out.join(format!("{stamp}-seed{seed}"));
    let mut suffix = 1;
    while dir.exists() {
        dir = out.join(format!("{stamp}-seed{seed}-{suffix}"));
        suffix += 1;
    }
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_run_artifacts(
    dir: &Path,
    cfg: &RunConfig,
    det: &Detector,
    report: &RunReport,
) -> plda::Result<()> {
    plda::io::write_config(cfg, &dir.join("config.toml"))?;
    det.save(&dir.join("detector.json"))?;
    plda::io::write_report(report, &dir.join("report.json"))?;
    plda::io::write_epoch_csv(report, &dir.join("epochs.csv"))?;
    Ok(())
}

fn cmd_train(args: TrainArgs) -> plda::Result<()> {
    let cfg = load_config_or_default(&args.config)?;
    let train = load_train_series(&args.data)?;
    let seed = args.seed.or(cfg.seeds.first().copied()).unwrap_or(1);
    let (det, report) = match args.mode {
        Mode::Orig => baseline_run(&train, &cfg, seed)?,
        Mode::Plda => run(&train, &cfg, seed, None)?,
    };
    let dir = make_run_dir(&args.out, seed)?;
    write_run_artifacts(&dir, &cfg, &det, &report)?;
    println!(
        "train: {} seed {} -> {} ({} epochs, final set {} samples, val loss {:.6e}, {:.1}s)",
        if args.mode == Mode::Orig {
            "orig"
        } else {
            "plda"
        },
        seed,
        dir.display(),
        report.epochs.len(),
        report.final_set_size,
        report.final_val_loss,
        report.wall_clock_secs
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> plda::Result<()> {
    let det = Detector::load(&args.checkpoint)?;
    let test = plda::io::read_series_csv(&args.data)?;
    let labels = test.labels.clone().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{}: test set has no label column",
            args.data.display()
        ))
    })?;
    let scores = anomaly_scores(&det, &test, det.config.w)?;
    let result = best_f1(&scores, &labels, true)?;
    if let Some(out) = &args.out {
        serde_json::to_writer_pretty(std::fs::File::create(out)?, &result)?;
    }
    println!(
        "eval: best F1 {:.4} (precision {:.4}, recall {:.4}, threshold {:.6e})",
        result.best_f1, result.precision, result.recall, result.best_threshold
    );
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> plda::Result<()> {
    let seeds = RunConfig::default().seeds;
    let outcomes = match args.which {
        Some(Which::Influence) => vec![
            validate::check_influence()?,
            validate::check_hvp_consistency()?,
        ],
        Some(Which::Reachability) => vec![validate::check_reachability()?],
        Some(Which::Decay) => vec![validate::check_decay()?],
        Some(Which::Rewards) => vec![validate::check_rewards(&seeds)?],
        None => vec![
            validate::check_influence()?,
            validate::check_hvp_consistency()?,
            validate::check_reachability()?,
            validate::check_decay()?,
            validate::check_rewards(&seeds)?,
        ],
    };
    for o in &outcomes {
        println!("{}", o.summary());
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareSummary {
    seeds: Vec<u64>,
    orig_f1: Vec<f64>,
    plda_f1: Vec<f64>,
    orig_mean: f64,
    orig_std: f64,
    plda_mean: f64,
    plda_std: f64,
    improvement_pct: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
    (mean, var.sqrt())
}

fn cmd_compare(args: CompareArgs) -> plda::Result<()> {
    let cfg = load_config_or_default(&args.config)?;
    if cfg.seeds.len() < 2 {
        return Err(Error::Config("compare needs at least 2 seeds".into()));
    }
    let train = load_train_series(&args.data.join("train.csv"))?;
    let test = plda::io::read_series_csv(&args.data.join("test.csv"))?;
    let labels = test
        .labels
        .clone()
        .ok_or_else(|| Error::InvalidArgument("test set has no label column".into()))?;

    let mut orig_f1 = Vec::new();
    let mut plda_f1 = Vec::new();
    for &seed in &cfg.seeds {
        let f1_of = |det: &Detector| -> plda::Result<f64> {
            let scores = anomaly_scores(det, &test, cfg.w)?;
            Ok(best_f1(&scores, &labels, true)?.best_f1)
        };
        let (det_o, _) = baseline_run(&train, &cfg, seed)?;
        let (det_p, _) = run(&train, &cfg, seed, None)?;
        let (o, p) = (f1_of(&det_o)?, f1_of(&det_p)?);
        println!("seed {seed}: orig {o:.4} plda {p:.4}");
        orig_f1.push(o);
        plda_f1.push(p);
    }
    let (orig_mean, orig_std) = mean_std(&orig_f1);
    let (plda_mean, plda_std) = mean_std(&plda_f1);
    let improvement_pct = 100.0 * (plda_mean - orig_mean) / orig_mean;
    println!(
        "compare: orig {orig_mean:.4} +- {orig_std:.4}, plda {plda_mean:.4} +- {plda_std:.4}, improvement {improvement_pct:+.2}%"
    );
    if let Some(out) = &args.out {
        let summary = CompareSummary {
            seeds: cfg.seeds.clone(),
            orig_f1,
            plda_f1,
            orig_mean,
            orig_std,
            plda_mean,
            plda_std,
            improvement_pct,
        };
        serde_json::to_writer_pretty(std::fs::File::create(out)?, &summary)?;
    }
    Ok(())
}
