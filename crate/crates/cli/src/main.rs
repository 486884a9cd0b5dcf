//! `actdiag`: model generation, diagnosers, planning, export and simulation
//! from the command line.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 when the inputs
//! are valid but the operation fails.

mod args;
mod commands;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, ReportFormat, SpacewireCommand};
use commands::Outcome;

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// The artifact goes to `--output` or standard output. The report goes to
/// standard output unless the artifact already occupies it.
fn emit(outcome: Outcome, output: Option<&Path>, format: ReportFormat) -> Result<()> {
    let report = match format {
        ReportFormat::Text => commands::render_text(&outcome.report),
        ReportFormat::Json => serde_json::to_string(&outcome.report)? + "\n",
    };
    match outcome.artifact {
        Some(artifact) if output.is_none() => {
            write_out(None, &artifact)?;
            if format == ReportFormat::Json {
                eprint!("{report}");
            }
        }
        Some(artifact) => {
            write_out(output, &artifact)?;
            print!("{report}");
        }
        None => print!("{report}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let format = cli.report;
    match cli.command {
        Command::Spacewire(SpacewireCommand::Gen {
            instruments,
            costs,
            with_check,
            output,
        }) => emit(
            commands::spacewire_gen(instruments, costs.as_deref(), with_check)?,
            output.as_deref(),
            format,
        ),
        Command::Compose { files, output } => {
            emit(commands::compose(&files)?, output.as_deref(), format)
        }
        Command::Stats { file, behavior } => emit(commands::stats(&file, behavior)?, None, format),
        Command::Diagnoser {
            file,
            behavior,
            output,
        } => {
            let mut outcome = commands::diagnoser(&file, behavior)?;
            if output.is_none() {
                outcome.artifact = None;
            }
            emit(outcome, output.as_deref(), format)
        }
        Command::ActiveDiagnoser {
            file,
            behavior,
            faults,
            output,
            format: ad_format,
        } => {
            let mut outcome = commands::active_diagnoser(&file, behavior, &faults, ad_format)?;
            if output.is_none() {
                outcome.artifact = None;
            }
            emit(outcome, output.as_deref(), format)
        }
        Command::Plan(args) => emit(commands::plan(&args)?, args.output.as_deref(), format),
        Command::Export {
            plan,
            format: export_format,
            mapping,
            output,
        } => emit(
            commands::export(&plan, export_format, mapping.as_deref())?,
            output.as_deref(),
            format,
        ),
        Command::Simulate {
            plan,
            scenario,
            instruments,
            trace,
        } => {
            let (outcome, log) = commands::simulate(&plan, &scenario, instruments)?;
            if let Some(path) = trace {
                write_out(Some(&path), &log)?;
            }
            emit(outcome, None, format)
        }
    }
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
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
