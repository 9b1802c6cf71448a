//! Command-line front end for the `aoi-core` toolkit.

pub mod args;
pub mod commands;
pub mod csv;
pub mod report;
pub mod sweep;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{policy_of, Cli, Command, Format, ModelCommand};

/// Exit code for bad input or a failed command.
pub const EXIT_ERROR: i32 = 1;
/// Exit code of `validate` when some check is outside tolerance.
pub const EXIT_DISCREPANCY: i32 = 2;

#[derive(Debug)]
pub struct CliError(pub String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError(format!("cannot write {}: {e}", path.display()))),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Validate(a) => {
            let sim = if a.sim {
                let points: Vec<f64> = a.s.iter().copied().filter(|&s| s < 0.0).collect();
                Some(commands::sim_config(&a.system, &a.sim_args, points)?)
            } else {
                None
            };
            let report = report::validate(
                a.system.tracked_params()?,
                a.system.policy(),
                a.system.source,
                &a.s,
                sim.as_ref(),
            )?;
            let text = match a.format {
                Format::Text => report::render_text(&report),
                Format::Json => serde_json::to_string_pretty(&report)? + "\n",
            };
            emit(&text, a.out.as_deref(), stdout)?;
            Ok(if report.passed { 0 } else { EXIT_DISCREPANCY })
        }
        Command::Mgf(a) => emit(&commands::mgf(&a)?, a.out.as_deref(), stdout).map(|_| 0),
        Command::Moments(a) => emit(&commands::moments(&a)?, a.out.as_deref(), stdout).map(|_| 0),
        Command::Sweep(a) => {
            let spec = sweep::SweepSpec {
                lambda: a.lambda,
                mu: a.mu,
                alpha: a.alpha,
                points: a.points,
                policies: a
                    .policies
                    .iter()
                    .map(|&k| policy_of(k, a.sink_handoff))
                    .collect(),
                sim: a.sim.then_some(sweep::SimSettings {
                    seed: a.sim_args.seed,
                    replications: a.sim_args.replications,
                    horizon: a.sim_args.horizon.0,
                    warmup: a.sim_args.warmup,
                }),
            };
            let rows = sweep::run_sweep(&spec)?;
            emit(&sweep::to_csv(&rows)?, a.out.as_deref(), stdout).map(|_| 0)
        }
        Command::Simulate(a) => emit(&commands::simulate(&a)?, a.out.as_deref(), stdout).map(|_| 0),
        Command::Model(ModelCommand::Export(a)) => {
            emit(&commands::export(&a)?, a.out.as_deref(), stdout).map(|_| 0)
        }
        Command::Model(ModelCommand::Solve(a)) => {
            emit(&commands::solve(&a)?, a.out.as_deref(), stdout).map(|_| 0)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_ERROR
                }
            };
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}
