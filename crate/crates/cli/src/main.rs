mod args;
mod commands;
mod params;
mod report;

use std::panic;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// `Input` covers anything the caller can fix (bad flags, files, data);
/// `Internal` means the engine broke one of its own guarantees.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
    /// The reader of our output went away (`elorank ... | head`).
    #[error("output closed")]
    Closed,
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            CliError::Closed
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe => {
                CliError::Closed
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

macro_rules! input_error {
    ($($t:ty),+) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        })+
    };
}

input_error!(
    elorank_core::EngineError,
    elorank_core::RatingError,
    elorank_core::evaluation::EvalError,
    elorank_core::simulator::SimError,
    elorank_core::sweep::SweepError
);

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Rate(a) => commands::rate(a),
        Command::Eval(a) => commands::eval(a),
        Command::Compare(a) => commands::compare(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Export(a) => commands::export(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = panic::catch_unwind(|| dispatch(&cli)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(CliError::Internal(msg))
    });
    match result {
        Ok(()) | Err(CliError::Closed) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("elorank: {e}");
            match e {
                CliError::Input(_) => ExitCode::from(1),
                CliError::Internal(_) | CliError::Closed => ExitCode::from(2),
            }
        }
    }
}
