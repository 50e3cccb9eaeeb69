//! Configuration-driven experiment runner and verification suite.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use polaron_core::Error;

use crate::config::{ConfigError, Experiment, RunConfig};
use crate::output::Outcome;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    /// Identities, LF split, second and third order.
    Verify,
    /// The configured experiment.
    Run,
    /// The configured parameter sweep.
    Sweep,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Verify => "verify",
            Verb::Run => "run",
            Verb::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub parallelism: Option<usize>,
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    /// A numerical precondition the configuration cannot satisfy.
    Rejected(Error),
    Numerical(Error),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Rejected(_) => EXIT_INVALID_CONFIG,
            RunError::Numerical(_) | RunError::Io(_) => EXIT_CHECK_FAILED,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Rejected(e) => write!(f, "configuration rejected: {e}"),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
            RunError::Io(e) => write!(f, "i/o failure: {e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::Unsupported(_)
            | Error::InsufficientCutoff { .. }
            | Error::StepSize { .. }
            | Error::OutOfScope(_) => RunError::Rejected(e),
            other => RunError::Numerical(other),
        }
    }
}

/// Reads a config file and applies command-line overrides.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(ConfigError(format!("cannot read {}: {e}", path.display()))))?;
    let mut cfg = RunConfig::from_json(&text).map_err(RunError::Config)?;
    if let Some(dir) = &overrides.output {
        cfg.output_dir = dir.clone();
    }
    if let Some(n) = overrides.parallelism {
        cfg.parallelism = n;
    }
    Ok(cfg)
}

/// Experiments a verb runs for a configuration.
pub fn plan(verb: Verb, cfg: &RunConfig) -> Result<Vec<Experiment>, ConfigError> {
    match verb {
        Verb::Verify => Ok(Experiment::VERIFICATION_SUITE.to_vec()),
        Verb::Run => Ok(vec![cfg.experiment]),
        Verb::Sweep if cfg.experiment == Experiment::Sweep => Ok(vec![Experiment::Sweep]),
        Verb::Sweep => Err(ConfigError(format!(
            "the sweep verb needs experiment \"sweep\" (got \"{}\")",
            cfg.experiment.name()
        ))),
    }
}

pub struct Execution {
    pub experiments: Vec<Experiment>,
    pub outcome: Outcome,
    pub timings: Vec<(String, f64)>,
}

/// Validates and computes everything in memory; nothing is written.
pub fn execute(verb: Verb, cfg: &RunConfig) -> Result<Execution, RunError> {
    let experiments = plan(verb, cfg).map_err(RunError::Config)?;
    cfg.validate_for(&experiments).map_err(RunError::Config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| RunError::Config(ConfigError(format!("cannot start worker pool: {e}"))))?;
    pool.install(|| {
        let mut outcome = Outcome::default();
        let mut timings = Vec::new();
        for &e in &experiments {
            let start = Instant::now();
            outcome.merge(experiments::run(e, cfg)?);
            timings.push((e.name().to_string(), start.elapsed().as_secs_f64()));
        }
        Ok(Execution {
            experiments,
            outcome,
            timings,
        })
    })
}

/// Runs a verb and writes every artifact to the configured output directory.
pub fn run_to_disk(verb: Verb, cfg: &RunConfig) -> Result<Execution, RunError> {
    let exec = execute(verb, cfg)?;
    let names: Vec<&str> = exec.experiments.iter().map(|e| e.name()).collect();
    output::write_all(&cfg.output_dir, verb.name(), &names, cfg, &exec.outcome, &exec.timings)
        .map_err(RunError::Io)?;
    Ok(exec)
}

/// Full command-line behaviour; returns the process exit code.
pub fn main_with(verb: Verb, config: &Path, overrides: &Overrides) -> i32 {
    let result = load_config(config, overrides).and_then(|cfg| run_to_disk(verb, &cfg).map(|exec| (cfg, exec)));
    match result {
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Ok((cfg, exec)) => {
            for c in &exec.outcome.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                match c.measured {
                    Some(v) => println!("{status} {} = {v:.6e}", c.name),
                    None => println!("{status} {} ({})", c.name, c.detail),
                }
            }
            println!("outputs written to {}", cfg.output_dir.display());
            let failures = exec.outcome.failures();
            if failures.is_empty() {
                EXIT_PASS
            } else {
                let names: Vec<&str> = failures.iter().map(|c| c.name.as_str()).collect();
                eprintln!("failing checks: {}", names.join(", "));
                EXIT_CHECK_FAILED
            }
        }
    }
}
