//! `castwin` command-line front-end.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error or
//! malformed input file.

mod args;
mod commands;
mod config;
mod repro;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use crate::args::{Cli, Command};

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Sequence(a) => commands::sequence(&a),
        Command::Sound(a) => commands::sound(&a),
        Command::Approximate(a) => commands::approximate(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::Heatmap(a) => commands::heatmap(&a),
        Command::Plan(a) => commands::plan(&a),
        Command::Repro(a) => repro::run(&a),
    }
}

// Malformed input files count as usage errors; everything else is a
// runtime failure.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    let malformed = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<castwin::Error>(),
            Some(castwin::Error::Malformed { .. })
        )
    });
    if malformed {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::apply_overlay(&Cli::command(), argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
