//! `whid` command-line tool.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 capacity error,
//! 4 numerical failure.

use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod manifest;

use args::Cli;

fn exit_code(err: &anyhow::Error) -> u8 {
    let core = err.chain().find_map(|e| e.downcast_ref::<whid::Error>());
    match core {
        Some(whid::Error::Capacity { .. }) => 3,
        Some(
            whid::Error::Instability(_)
            | whid::Error::SingularResponse(_)
            | whid::Error::FitDegenerate(_)
            | whid::Error::Degenerate(_)
            | whid::Error::Conjugacy(_),
        ) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
