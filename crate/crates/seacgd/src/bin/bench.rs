use clap::{Args, Parser, Subcommand, ValueEnum};
use seacgd::bench::{load_config, run_experiment, Experiment, ExperimentConfig, Mode};
use seacgd::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bench",
    about = "Benchmark experiments for saddle-escaping asynchronous coordinate gradient descent",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Saddle-evasion endpoints across dimensions (final objective values).
    SaddleEvasion(RunArgs),
    /// Time-to-target under increasing injected worker delays.
    DelaySweep(RunArgs),
    /// Virtual time-to-target with varying worker counts.
    Scalability(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Simulated,
    Parallel,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags below override its axes.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem dimension; repeat for several (must be even).
    #[arg(long = "dim")]
    dims: Vec<usize>,
    /// Worker count; repeat for several.
    #[arg(long = "workers")]
    workers: Vec<usize>,
    /// Staleness bound tau (default: workers-1, or 2*workers for delay sweeps).
    #[arg(long)]
    tau: Option<usize>,
    /// Mean injected delay in virtual time units; repeat for several.
    #[arg(long = "expected-delay")]
    expected_delays: Vec<f64>,
    /// RNG seed; repeat for several.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Execution backend.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Output directory for traces, event logs, and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run this many experiment cells concurrently.
    #[arg(long)]
    jobs: Option<usize>,
}

fn build_config(experiment: Experiment, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let mut cfg = load_config(path)?;
            cfg.experiment = experiment;
            cfg
        }
        None => ExperimentConfig::new(
            experiment,
            PathBuf::from(format!("bench_out/{}", experiment.as_str())),
            Mode::Simulated,
        ),
    };
    if !args.dims.is_empty() {
        cfg.dims = args.dims.clone();
    }
    if !args.workers.is_empty() {
        cfg.workers = args.workers.clone();
    }
    if !args.expected_delays.is_empty() {
        cfg.expected_delays = args.expected_delays.clone();
    }
    if !args.seeds.is_empty() {
        cfg.seeds = args.seeds.clone();
    }
    if args.tau.is_some() {
        cfg.tau = args.tau;
    }
    if let Some(mode) = args.mode {
        cfg.mode = match mode {
            ModeArg::Simulated => Mode::Simulated,
            ModeArg::Parallel => Mode::Parallel,
        };
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(jobs) = args.jobs {
        cfg.jobs = jobs;
    }
    let cfg = cfg.resolve();
    cfg.validate()?;
    Ok(cfg)
}

fn is_config_error(err: &Error) -> bool {
    matches!(
        err,
        Error::Config(_)
            | Error::Regime { .. }
            | Error::DimensionMismatch { .. }
            | Error::DegenerateProblem { .. }
    )
}

fn run(experiment: Experiment, args: &RunArgs) -> ExitCode {
    let cfg = match build_config(experiment, args) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("bench: config error: {err}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&cfg) {
        Ok(report) => {
            println!(
                "{:<52} {:>14} {:>12} {:>12} {:>8}",
                "run", "final_f", "t_to_target", "iters", "escapes"
            );
            for r in &report.results {
                let ttt = r
                    .time_to_target
                    .map(|t| format!("{t:.3}"))
                    .unwrap_or_else(|| "-".to_string());
                println!(
                    "{:<52} {:>14.6e} {:>12} {:>12} {:>8}",
                    r.cell.run_id, r.final_f, ttt, r.total_iters, r.escapes
                );
            }
            println!("wrote {}", cfg.output_dir.join("summary.json").display());
            ExitCode::SUCCESS
        }
        Err(err) if is_config_error(&err) => {
            eprintln!("bench: config error: {err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("bench: run failed: {err}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::SaddleEvasion(args) => run(Experiment::SaddleEvasion, &args),
        Cmd::DelaySweep(args) => run(Experiment::DelaySweep, &args),
        Cmd::Scalability(args) => run(Experiment::Scalability, &args),
    }
}
