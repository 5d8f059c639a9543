use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stace_harness::compare::{compare_runs, write_comparison_csv};
use stace_harness::output::{read_report_json, report_path_for, write_ccdf_csv, write_outputs, write_report_json};
use stace_harness::{
    run_experiment_with, Coding, ConstellationKind, Method, PartialConfig, RunOptions, ValidationError,
};

#[derive(Parser)]
#[command(name = "stace", version, about = "ACE PAPR reduction experiments for STBC/SFBC OFDM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one Monte Carlo experiment and write its CCDF curve and report.
    Run(RunArgs),
    /// Read several reports off at one probability.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with any of the experiment fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    constellation: Option<ConstellationKind>,
    #[arg(long)]
    n_c: Option<usize>,
    #[arg(long)]
    oversample: Option<usize>,
    #[arg(long, value_enum)]
    coding: Option<Coding>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    clip_db: Option<f64>,
    /// Transmissions (PAPR samples).
    #[arg(long)]
    frames: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threshold_start: Option<f64>,
    #[arg(long)]
    threshold_stop: Option<f64>,
    #[arg(long)]
    threshold_step: Option<f64>,
    /// CCDF CSV path. Without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report path; defaults to the CSV path with a `.json` extension.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, env = "STACE_WORKERS")]
    workers: Option<usize>,
    /// Demap every transmitted frame and count bit errors.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    progress: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    probability: f64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report files, each `path` or `label=path`.
    #[arg(required = true)]
    reports: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = match e.downcast_ref::<ValidationError>() {
                Some(v) => serde_json::json!({ "error": "invalid_config", "violations": v.violations }),
                None => serde_json::json!({ "error": "failed", "message": format!("{e:#}") }),
            };
            eprintln!("{body}");
            ExitCode::from(if e.is::<ValidationError>() { 2 } else { 1 })
        }
    }
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let file = match &args.config {
        Some(path) => PartialConfig::load(path)?,
        None => PartialConfig::default(),
    };
    let flags = PartialConfig {
        constellation: args.constellation,
        n_c: args.n_c,
        oversample: args.oversample,
        coding: args.coding,
        method: args.method,
        iterations: args.iterations,
        clip_db: args.clip_db,
        frames: args.frames,
        seed: args.seed,
        threshold_start_db: args.threshold_start,
        threshold_stop_db: args.threshold_stop,
        threshold_step_db: args.threshold_step,
        output_path: args.out.clone(),
    };
    let cfg = file.overlay(flags).resolve();
    cfg.validate()?;

    let opts = RunOptions {
        workers: args.workers,
        verify: args.verify,
        progress: args.progress,
    };
    let report = run_experiment_with(&cfg, &opts)?;

    match &cfg.output_path {
        Some(csv_path) => {
            let json_path = args.report.clone().unwrap_or_else(|| report_path_for(csv_path));
            write_outputs(&report, csv_path, &json_path)?;
        }
        None => {
            write_ccdf_csv(&report.curve, std::io::stdout().lock())?;
            if let Some(json_path) = &args.report {
                write_report_json(&report, std::fs::File::create(json_path)?)?;
            }
        }
    }

    let mut err = std::io::stderr().lock();
    for r in &report.papr_at {
        match r.papr_db {
            Some(v) => writeln!(err, "papr at {:e}: {v:.3} dB", r.probability)?,
            None => writeln!(err, "papr at {:e}: below curve floor", r.probability)?,
        }
    }
    if let Some(n) = report.bit_errors {
        writeln!(err, "bit errors: {n}")?;
    }
    writeln!(err, "wall time: {:.2} s", report.wall_time)?;
    anyhow::ensure!(report.bit_errors.unwrap_or(0) == 0, "bit preservation check failed");
    Ok(())
}

fn compare(args: CompareArgs) -> anyhow::Result<()> {
    let reports = args
        .reports
        .iter()
        .map(|arg| {
            let (label, path) = match arg.split_once('=') {
                Some((l, p)) => (l.to_string(), PathBuf::from(p)),
                None => {
                    let p = PathBuf::from(arg);
                    let l = p
                        .file_stem()
                        .map_or_else(|| arg.clone(), |s| s.to_string_lossy().into_owned());
                    (l, p)
                }
            };
            Ok((label, read_report_json(&path)?))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let rows = compare_runs(&reports, args.probability)?;
    match args.out {
        Some(path) => write_comparison_csv(&rows, std::fs::File::create(path)?),
        None => write_comparison_csv(&rows, std::io::stdout().lock()),
    }
}
