mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

#[derive(Debug)]
pub enum CliError {
    /// Bad flag value or combination; exit status 2.
    Usage(String),
    /// Failure while doing the work; exit status 1.
    Runtime(String),
}

impl From<topicrate::Error> for CliError {
    fn from(e: topicrate::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Validation error naming the offending flag.
pub fn usage(flag: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("--{flag}: {message}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
