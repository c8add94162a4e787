//! Benchmark CLI around the meetg crate.
//!
//! Exit statuses: 0 success; 2 usage or validation; 3 data or file parse;
//! 4 numeric failure.

mod args;
mod commands;
mod records;
mod source;

use clap::Parser;
use meetg::error::Error;

use args::{Cli, Command};

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Invalid { .. } | Error::ShapeMismatch { .. } => 2,
        Error::Parse { .. }
        | Error::Io(_)
        | Error::ModelFormat { .. }
        | Error::VersionMismatch { .. } => 3,
        Error::NonFinite { .. } | Error::SvdNonConvergence { .. } => 4,
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => commands::train(args),
        Command::Crossval(args) => commands::crossval(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::CompareElm(args) => commands::compare_elm(args),
    };
    if let Err(error) = result {
        eprintln!("error: {error}");
        std::process::exit(exit_code(&error));
    }
}
