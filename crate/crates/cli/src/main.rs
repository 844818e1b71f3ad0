mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration.
    Usage(String),
    /// Unreadable, malformed or inconsistent input data.
    Data(String),
    /// A broken internal invariant.
    Internal(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<seqwin::Error> for CliError {
    fn from(e: seqwin::Error) -> Self {
        if e.is_data_error() || matches!(e, seqwin::Error::DimensionMismatch { .. }) {
            CliError::Data(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn parse() -> Result<Cli, ExitCode> {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::merge(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("seqwin: {e}");
            return Err(ExitCode::from(e.code()));
        }
    };
    Cli::try_parse_from(argv).map_err(|e| {
        let _ = e.print();
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
            _ => ExitCode::from(1),
        }
    })
}

fn run(cli: Cli) -> CliResult<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Synth(a) => commands::synth(a),
        Command::Shuffle(a) => commands::shuffle(a),
        Command::Localize(a) => commands::localize(a),
        Command::Diag(a) => commands::diag(a),
    }
}

fn main() -> ExitCode {
    let cli = match parse() {
        Ok(c) => c,
        Err(code) => return code,
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let outcome = std::panic::catch_unwind(|| run(cli))
        .unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            Err(CliError::Internal(msg))
        });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("seqwin: {e}");
            ExitCode::from(e.code())
        }
    }
}
