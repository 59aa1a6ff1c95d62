//! `pullvote`: generate graphs, compute spectra, run voting traces and
//! campaigns, and check the mixing inequalities.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error, 130 interrupted (partial results written).

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Context, Status};

#[derive(Parser, Debug)]
#[command(name = "pullvote", version, about = "Synchronous pull voting on graphs")]
struct Cli {
    /// Cap the number of worker threads. Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Leave the generation timestamp out of every output.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a graph and write it as an edge list.
    Gen(commands::GenArgs),
    /// Stationary distribution range and absolute second eigenvalue.
    Spectral(commands::SpectralArgs),
    /// One seeded voting run.
    Vote(commands::VoteArgs),
    /// Run a Monte Carlo campaign and write its report.
    Experiment(commands::ExperimentArgs),
    /// Check the mixing inequalities and drift bounds on random instances.
    VerifyLemmas(commands::VerifyArgs),
}

fn set_workers(n: usize) -> anyhow::Result<()> {
    if n == 0 {
        anyhow::bail!("--workers must be at least 1");
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    #[cfg(not(feature = "parallel"))]
    eprintln!("warning: built without the parallel feature; --workers {n} has no effect");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Context {
        timestamps: !cli.no_timestamp,
    };
    let result = cli.workers.map_or(Ok(()), set_workers).and_then(|()| match &cli.command {
        Command::Gen(a) => commands::gen(a, &ctx),
        Command::Spectral(a) => commands::spectral(a, &ctx),
        Command::Vote(a) => commands::vote(a, &ctx),
        Command::Experiment(a) => commands::experiment(a, &ctx),
        Command::VerifyLemmas(a) => commands::verify_lemmas(a, &ctx),
    });
    match result {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::VerificationFailed) => ExitCode::from(1),
        Ok(Status::Interrupted) => ExitCode::from(130),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
