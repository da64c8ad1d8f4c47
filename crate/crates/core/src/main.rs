use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hazardq::cli::{load_config, run_experiment, write_outputs, Experiment};

/// Simulation and verification tool for a single-server queue with
/// age-dependent arrival and service intensities.
///
/// Exit status: 0 when every verdict is PASS, 1 on any FAIL, 2 on a
/// configuration or runtime error. Worker threads follow RAYON_NUM_THREADS;
/// results do not depend on it.
#[derive(Parser, Debug)]
#[command(name = "hazardq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// JSON experiment config.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the config's master_seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Override the replica count.
    #[arg(long, value_name = "N")]
    replicas: Option<u64>,
    /// Output directory for CSV files and summary.json.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one path and export its events.
    Simulate(Common),
    /// Dynkin residuals for time-independent test functions.
    Dynkin(Common),
    /// Dynkin residuals for time-dependent test functions.
    DynkinTime(Common),
    /// Small-interval jump probabilities and their order in the step size.
    Lemma1(Common),
    /// Martingale increment checks against probe functions.
    Martingale(Common),
    /// Ergodicity conditions and the largest admissible rate exponent.
    Conditions(Common),
    /// Closed-form Lyapunov drift against the generator.
    Drift(Common),
    /// Total-variation distance between two starting states over time.
    Converge(Common),
    /// Moment bound against the dominating no-service process.
    Moments(Common),
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Command::Simulate(c) => (Experiment::Simulate, c),
            Command::Dynkin(c) => (Experiment::Dynkin, c),
            Command::DynkinTime(c) => (Experiment::DynkinTime, c),
            Command::Lemma1(c) => (Experiment::Lemma1, c),
            Command::Martingale(c) => (Experiment::Martingale, c),
            Command::Conditions(c) => (Experiment::Conditions, c),
            Command::Drift(c) => (Experiment::Drift, c),
            Command::Converge(c) => (Experiment::Converge, c),
            Command::Moments(c) => (Experiment::Moments, c),
        }
    }
}

fn main() -> ExitCode {
    let (experiment, args) = Cli::parse().command.split();
    let mut cfg = match load_config(&args.config, Some(experiment)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = cfg.apply_overrides(args.seed, args.replicas) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match write_outputs(&report, &cfg, &args.out) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: cannot write outputs to {}: {e}", args.out.display());
            return ExitCode::from(2);
        }
    }
    println!("{experiment}: {}", report.verdict.as_str());
    if report.verdict.is_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
