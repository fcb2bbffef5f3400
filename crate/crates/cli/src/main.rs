//! `hmlasso`: fit Lasso models on CSV data with missing entries, repair
//! pairwise covariances, simulate data and run benchmarks.

mod bench;
mod config;
mod cov;
mod fail;
mod fit;
mod opts;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "hmlasso", version, about = "Lasso regression for data with many missing entries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    Fit(fit::FitArgs),
    Cov(cov::CovArgs),
    Simulate(simulate::SimulateArgs),
    Bench(bench::BenchArgs),
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(a) => fit::run(a),
        Command::Cov(a) => cov::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
