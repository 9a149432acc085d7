//! `bbs`: command-line front end for the box-ball library.
//!
//! Exit codes: 0 on success, 2 when a statistical test runs and fails,
//! 1 on usage or domain errors.

mod args;
mod commands;
mod spec;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Status;
use spec::ExperimentSpec;

fn run(cli: Cli) -> Result<Status> {
    let spec = match cli.command {
        Command::Run(r) => {
            let mut spec = ExperimentSpec::load(&r.spec)?;
            spec.threads = cli.threads.or(spec.threads);
            spec
        }
        mut command => {
            command.resolve_seed();
            ExperimentSpec {
                command,
                threads: cli.threads,
            }
        }
    };
    if let Some(n) = spec.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    if let Some(p) = &cli.save_spec {
        spec.save(p)?;
    }
    commands::execute(&spec, cli.out.as_ref()).with_context(|| spec.name())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
