//! `fracscrew` executable.

mod cli;
mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::fmt::Display;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{ArgMatches, CommandFactory, FromArgMatches};

use cli::{Cli, Command};
use commands::Outcome;
use output::Manifest;

/// Exit status 1: bad input or domain violation.
const EXIT_INPUT: u8 = 1;
/// Exit status 2: a solver or quadrature failed to converge.
const EXIT_NUMERICAL: u8 = 2;

pub struct CliError {
    code: u8,
    kind: &'static str,
    message: String,
    /// Output already produced before the failure was detected.
    outcome: Option<Outcome>,
}

impl std::fmt::Debug for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (exit {}): {}", self.kind, self.code, self.message)
    }
}

impl CliError {
    fn new(code: u8, kind: &'static str, message: impl Display) -> Self {
        Self { code, kind, message: message.to_string(), outcome: None }
    }

    pub fn usage(message: impl Display) -> Self {
        Self::new(EXIT_INPUT, "usage", message)
    }

    pub fn io(message: impl Display) -> Self {
        Self::new(EXIT_INPUT, "io", message)
    }

    pub fn domain(message: impl Display) -> Self {
        Self::new(EXIT_INPUT, "domain", message)
    }

    pub fn invalid(message: impl Display) -> Self {
        Self::new(EXIT_INPUT, "invalid_input", message)
    }

    pub fn with_outcome(mut self, outcome: Outcome) -> Self {
        self.outcome = Some(outcome);
        self
    }
}

impl From<fracscrew::Error> for CliError {
    fn from(e: fracscrew::Error) -> Self {
        use fracscrew::Error as E;
        let (code, kind) = match &e {
            E::Domain(_) => (EXIT_INPUT, "domain"),
            E::InvalidInput(_) => (EXIT_INPUT, "invalid_input"),
            E::Io(_) => (EXIT_INPUT, "io"),
            E::Overflow(_) => (EXIT_NUMERICAL, "overflow"),
            E::NotConverged(_) => (EXIT_NUMERICAL, "not_converged"),
            E::Numerical(_) => (EXIT_NUMERICAL, "numerical"),
        };
        Self::new(code, kind, e)
    }
}

/// Raw values of every argument of the subcommand, defaults included.
fn parameters(name: &str, m: &ArgMatches) -> Vec<(String, String)> {
    let cmd = Cli::command();
    let Some(sub) = cmd.find_subcommand(name) else {
        return Vec::new();
    };
    let mut out: Vec<(String, String)> = m
        .ids()
        .filter(|id| sub.get_arguments().any(|a| a.get_id() == *id))
        .filter_map(|id| {
            let raw = m.get_raw(id.as_str())?;
            let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            Some((id.as_str().to_string(), vals.join(",")))
        })
        .collect();
    out.sort();
    out
}

fn configure_threads() -> Result<Option<usize>, CliError> {
    let Ok(v) = std::env::var("FRACSCREW_THREADS") else {
        return Ok(None);
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::usage(format!("FRACSCREW_THREADS={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(CliError::usage)?;
    Ok(Some(n))
}

fn dispatch(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Validate(a) => commands::validate_cmd(a),
        Command::Specfun(a) => commands::specfun(a),
        Command::Extend1d(a) => commands::extend1d(a),
        Command::Minimize1d(a) => commands::minimize1d(a),
        Command::Threshold(a) => commands::threshold(a),
        Command::Minimize3d(a) => commands::minimize3d(a),
        Command::Barrier(a) => commands::barrier(a),
        Command::Competitor(a) => commands::competitor(a),
        Command::Nmc(a) => commands::nmc(a),
        Command::Perimeter(a) => commands::perimeter(a),
    }
}

fn run(args: Vec<OsString>) -> Result<(), CliError> {
    let args = config::merge(args)?;
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(()),
                _ => Err(CliError { code: EXIT_INPUT, kind: "usage", message: String::new(), outcome: None }),
            };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(CliError::usage)?;
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let mut params = parameters(name, sub);
    if let Some(n) = configure_threads()? {
        params.push(("threads".into(), n.to_string()));
    }
    let start = Instant::now();
    let result = dispatch(&cli.command);
    let wall_time = start.elapsed().as_secs_f64();
    let (outcome, err) = match result {
        Ok(o) => (Some(o), None),
        Err(mut e) => (e.outcome.take(), Some(e)),
    };
    if let Some(o) = outcome {
        let manifest = Manifest { subcommand: name.to_string(), parameters: params, results: o.results, wall_time };
        manifest.write(&o.outputs, cli.manifest.as_deref())?;
    }
    err.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("{}", serde_json::json!({ "error": e.kind, "message": e.message }));
            }
            ExitCode::from(e.code)
        }
    }
}
