//! One function per subcommand. Each returns the exit code to use; errors
//! carry their own code.

mod analyze;
mod simulate;
mod steer;
mod sweep;
mod validate;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use magswim_core::SwimmerParams;
use serde::Serialize;

use crate::cli::{Cli, Command, Common};
use crate::io;

pub use analyze::{certify, x5_grid, Bundle, CheckReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Code {
    Ok = 0,
    Assumption = 1,
    Simulation = 2,
    Steering = 3,
    Io = 4,
}

impl From<Code> for ExitCode {
    fn from(c: Code) -> Self {
        ExitCode::from(c as u8)
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: Code,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl std::error::Error for Failure {}

pub(crate) trait WithCode<T> {
    fn code(self, code: Code) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> WithCode<T> for Result<T, E> {
    fn code(self, code: Code) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

/// Maps a library error to the exit code of the command that hit it.
pub(crate) fn core_code(e: &magswim_core::Error, fallback: Code) -> Code {
    match e {
        magswim_core::Error::InvalidParameter { .. } => Code::Assumption,
        _ => fallback,
    }
}

pub(crate) fn core_failure(e: magswim_core::Error, fallback: Code) -> Failure {
    Failure {
        code: core_code(&e, fallback),
        error: e.into(),
    }
}

/// Context shared by every command.
pub(crate) struct Ctx<'a> {
    pub common: &'a Common,
    pub params: SwimmerParams,
}

#[derive(Serialize)]
pub(crate) struct Provenance<'a> {
    pub seed: u64,
    pub params_file: Option<&'a Path>,
    pub params: SwimmerParams,
    pub dt_max: f64,
    pub horizon: f64,
    pub beta: f64,
}

impl<'a> Ctx<'a> {
    pub fn provenance(&self) -> Provenance<'a> {
        Provenance {
            seed: self.common.seed,
            params_file: self.common.params.as_deref(),
            params: self.params,
            dt_max: self.common.dt_max,
            horizon: self.common.horizon,
            beta: self.common.beta,
        }
    }

    pub fn out(&self, name: &str) -> Result<PathBuf, Failure> {
        let dir = &self.common.out;
        fs::create_dir_all(dir)
            .map_err(anyhow::Error::from)
            .map_err(|e| e.context(format!("creating {}", dir.display())))
            .code(Code::Io)?;
        Ok(dir.join(name))
    }
}

fn load_params(common: &Common) -> Result<SwimmerParams, Failure> {
    match &common.params {
        Some(path) => io::read_params(path).code(Code::Io),
        None => Ok(SwimmerParams::REFERENCE),
    }
}

fn check_numbers(common: &Common) -> Result<(), Failure> {
    let bad = |what: &str, v: f64| Failure {
        code: Code::Simulation,
        error: anyhow::anyhow!("--{what} must be finite and positive, got {v}"),
    };
    if !(common.dt_max.is_finite() && common.dt_max > 0.0) {
        return Err(bad("dt-max", common.dt_max));
    }
    if !(common.horizon.is_finite() && common.horizon > 0.0) {
        return Err(bad("horizon", common.horizon));
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<Code, Failure> {
    check_numbers(&cli.common)?;
    let params = load_params(&cli.common)?;
    let ctx = Ctx {
        common: &cli.common,
        params,
    };
    match &cli.command {
        Command::Validate => validate::run(&ctx),
        Command::Simulate(a) => simulate::run(&ctx, a),
        Command::Analyze(a) => analyze::run(&ctx, a),
        Command::Steer(a) => steer::run(&ctx, a),
        Command::Sweep(a) => sweep::run(&ctx, a),
    }
}
