// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! `fluxquant` command-line front end.
//!
//! Exit status: 0 on success, 1 on invalid input or flags, 2 on numerical
//! failure (ill-conditioned transforms, empty fit windows, failed gauge
//! checks).

mod args;
mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::{Failure, Outcome, EXIT_VALIDATION};

fn dispatch(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Quantize(a) => commands::quantize(a),
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Rates(a) => commands::rates(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::CheckGauge(a) => commands::check_gauge(a),
    }
}

fn common(cli: &Cli) -> &args::Common {
    match &cli.command {
        Command::Quantize(a) => &a.common,
        Command::Spectrum(a) | Command::Rates(a) => &a.common,
        Command::Simulate(a) => &a.common,
        Command::CheckGauge(a) => &a.common,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_VALIDATION),
            };
        }
    };
    let outcome = match dispatch(&cli) {
        Ok(o) => o,
        Err(f) => {
            eprintln!("error: {}: {}", cli.command.name(), f.message);
            return ExitCode::from(f.code);
        }
    };
    let c = common(&cli);
    let text = outcome.report.render(c.format);
    let written = match &c.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("writing report `{}`: {e}", path.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| format!("writing report to standard output: {e}")),
    };
    if let Err(msg) = written {
        eprintln!("error: {}: {msg}", cli.command.name());
        return ExitCode::from(EXIT_VALIDATION);
    }
    ExitCode::from(outcome.code)
}
