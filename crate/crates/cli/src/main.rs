//! `hitlab`: reproducible hitting-time experiments.
//!
//! Exit codes: 0 success, 1 assertion failure, 2 configuration or
//! precondition error, 3 resource error.

use clap::{Args, Parser, Subcommand};
use hitlab_cli::config::{resolve, Kind, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hitlab", version, about = "Exact hitting-time experiments for rotations, torus translations and flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config `{kind, seed, out, jobs, params}`; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every sampled quantity.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Greedy intertwined pair with exact membership and minimality checks.
    BuildPair(Common),
    /// Hitting, entry and recurrence times for sampled points.
    Hit(Common),
    /// Hitting-time indicators over a radius schedule.
    Indicators(Common),
    /// Exact level-set measures in one window.
    LevelMeasure(Common),
    /// Key-lemma queries: exact tail measures against certified bounds.
    KeyLemma(Common),
    /// Window sums against the series bounds.
    BorelCantelli(Common),
    /// Translation flows, reparametrizations and time-1 maps.
    Flow(Common),
    /// Correlations, decay fits and bound evaluators.
    Corr(Common),
    /// The full invariant suite.
    VerifyAll(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, c) = match cli.command {
        Command::BuildPair(c) => (Kind::BuildPair, c),
        Command::Hit(c) => (Kind::Hit, c),
        Command::Indicators(c) => (Kind::Indicators, c),
        Command::LevelMeasure(c) => (Kind::LevelMeasure, c),
        Command::KeyLemma(c) => (Kind::KeyLemma, c),
        Command::BorelCantelli(c) => (Kind::BorelCantelli, c),
        Command::Flow(c) => (Kind::Flow, c),
        Command::Corr(c) => (Kind::Corr, c),
        Command::VerifyAll(c) => (Kind::VerifyAll, c),
    };
    let ov = Overrides {
        config: c.config,
        seed: c.seed,
        out: c.out,
        jobs: c.jobs,
    };
    let cfg = match resolve(kind, ov) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("hitlab: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    if let Some(j) = cfg.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("hitlab: cannot start {j} workers: {e}");
            return ExitCode::from(2);
        }
    }
    match hitlab_cli::run(&cfg) {
        Ok(out) => {
            println!("{}: {}", kind.name(), out.summary);
            println!("artifacts in {}", cfg.out.display());
            if out.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("hitlab: assertion failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("hitlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
