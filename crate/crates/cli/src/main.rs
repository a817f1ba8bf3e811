//! `kcover`: command-line harness for the k-coverage experiments.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 when more than
//! 0.1% of trials were degenerate (outputs are still written).

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::{Context, Failure, TrialTally};
use kcover::harness::MAX_DEGENERATE_FRACTION;

const EXIT_CONFIG: u8 = 1;
const EXIT_DEGENERATE: u8 = 2;

fn run(cli: Cli) -> Result<TrialTally, Failure> {
    if let Some(threads) = cli.threads {
        kcover::exec::configure_threads(threads)?;
    }
    let ctx = Context { seed: cli.seed.unwrap_or(0), out: cli.out, format: cli.format };
    match &cli.command {
        Command::Sample(a) => commands::sample(&ctx, a),
        Command::CriticalPoints(a) => commands::critical_points(&ctx, a),
        Command::Coverage(a) => commands::coverage(&ctx, a),
        Command::Sweep(a) => commands::sweep(&ctx, a, cli.seed),
        Command::Window(a) => commands::window(&ctx, a),
        Command::Euler(a) => commands::euler(&ctx, a),
        Command::Constants(a) => commands::constants(&ctx, a),
        Command::OracleCompare(a) => commands::oracle_compare(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(tally) => {
            if tally.trials > 0 && tally.degenerate as f64 > MAX_DEGENERATE_FRACTION * tally.trials as f64 {
                eprintln!("kcover: {} of {} trials degenerate", tally.degenerate, tally.trials);
                return ExitCode::from(EXIT_DEGENERATE);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Config(msg)) => {
            eprintln!("kcover: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Degenerate(msg)) => {
            eprintln!("kcover: {msg}");
            ExitCode::from(EXIT_DEGENERATE)
        }
    }
}
