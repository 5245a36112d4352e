//! `mdlasso` command-line front end. [`run`] parses arguments, runs one
//! subcommand on a rayon pool sized by `MDLASSO_THREADS`, and returns the
//! process exit code.

mod args;
mod bounds;
mod config;
mod data;
mod output;
mod simulate;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;

use clap::Parser;
use mdlasso_core::MdLassoError;

pub use args::{Cli, Command};
pub use data::{parse_estimator_list, ModelDocument, TopPredictor};
pub use output::normal_quantile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_THEORY: i32 = 4;

pub const THREADS_ENV: &str = "MDLASSO_THREADS";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<MdLassoError> for CliError {
    fn from(e: MdLassoError) -> Self {
        let code = match e {
            MdLassoError::TailCondition { .. } | MdLassoError::NoFeasibleScale { .. } => {
                EXIT_THEORY
            }
            MdLassoError::Quadrature { .. } => EXIT_SOLVER,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::input(format!("json: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Where a subcommand writes its console output.
pub struct Console<'a> {
    pub out: &'a mut (dyn Write + Send),
    pub err: &'a mut (dyn Write + Send),
    pub verbose: bool,
}

impl Console<'_> {
    /// Progress and diagnostics; shown only with `--verbose`.
    pub(crate) fn note(&mut self, msg: impl fmt::Display) {
        if self.verbose {
            let _ = writeln!(self.err, "{msg}");
        }
    }

    pub(crate) fn warn(&mut self, msg: impl fmt::Display) {
        let _ = writeln!(self.err, "warning: {msg}");
    }
}

fn thread_count() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::input(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

fn dispatch(cli: Cli, console: &mut Console<'_>) -> CliResult<i32> {
    let strict = cli.strict;
    match cli.command {
        Command::Fit(a) => data::cmd_fit(a, strict, console),
        Command::Tune(a) => data::cmd_tune(a, strict, console),
        Command::Stability(a) => data::cmd_stability(a, strict, console),
        Command::Qqdata(a) => data::cmd_qqdata(a, console),
        Command::Simulate(a) => simulate::cmd_simulate(a, console),
        Command::Bounds(a) => bounds::cmd_bounds(a, console),
        Command::Curve(a) => bounds::cmd_curve(a, console),
    }
}

/// Run the CLI on `args` (including the program name) and return the exit
/// code. Errors are reported on `err`.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let mut console = Console {
        out,
        err,
        verbose: cli.verbose,
    };
    let outcome = thread_count().and_then(|threads| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
        pool.install(|| dispatch(cli, &mut console))
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(console.err, "error: {e}");
            e.code
        }
    }
}
