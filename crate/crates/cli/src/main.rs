//! `sonobio`: analyze studies, render phantoms, evaluate backends and compute
//! observer agreement.
//!
//! Exit codes: 0 success, 2 input error, 3 empty result, 64 usage error.

mod agree;
mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// Why a command did not succeed, mapped to an exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(String),
    Empty(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Empty(_) => 3,
            Failure::Usage(_) => 64,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Empty(m) => m,
        }
    }
}

/// Progress lines on stdout unless `--quiet`.
pub struct Progress {
    quiet: bool,
}

impl Progress {
    pub fn say(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }
}

#[cfg(feature = "parallel")]
fn set_threads(threads: Option<u32>) -> Result<(), Failure> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start {n} threads: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_threads: Option<u32>) -> Result<(), Failure> {
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    set_threads(cli.threads)?;
    let progress = Progress { quiet: cli.quiet };
    match &cli.command {
        Command::Analyze(a) => commands::analyze(a, &progress),
        Command::Phantom(a) => commands::phantom(a, &progress),
        Command::Agree(a) => agree::agree(a, &progress),
        Command::Evaluate(a) => commands::evaluate(a, &progress),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(64);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sonobio: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
