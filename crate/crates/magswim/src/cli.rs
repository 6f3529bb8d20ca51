use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use magswim_core::State;
use serde::Serialize;

use crate::io::parse_state;

#[derive(Parser, Debug)]
#[command(name = "magswim", version, about = "Two-link magneto-elastic swimmer: simulate, analyze, steer")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct Common {
    /// Parameter file (JSON); the reference swimmer when omitted.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long = "dt-max", global = true, default_value_t = 1e-3)]
    pub dt_max: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub horizon: f64,
    /// Perpendicular field of the reference loop.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub beta: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a parameter set against the standing assumption.
    Validate,
    /// Integrate the swimmer under a field law and export the trajectory.
    Simulate(SimulateArgs),
    /// Linear and Lie-bracket controllability certificates.
    Analyze(AnalyzeArgs),
    /// Steer between two nearby configurations.
    Steer(SteerArgs),
    /// Certificates over a grid in two parameter fields.
    Sweep(SweepArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalChoice {
    Zero,
    Constant,
    Sine,
    Random,
    File,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Component {
    Par,
    Perp,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = SignalChoice::Zero)]
    pub signal: SignalChoice,
    /// Parallel field of the constant law.
    #[arg(long = "h-par", default_value_t = 0.0, allow_hyphen_values = true)]
    pub h_par: f64,
    /// Perpendicular field of the constant law.
    #[arg(long = "h-perp", default_value_t = 0.0, allow_hyphen_values = true)]
    pub h_perp: f64,
    /// Amplitude of the sine or random law.
    #[arg(long, default_value_t = 0.05)]
    pub amplitude: f64,
    /// Field component driven by the sine law.
    #[arg(long, value_enum, default_value_t = Component::Perp)]
    pub component: Component,
    /// Number of sine periods over the horizon.
    #[arg(long, default_value_t = 1.0)]
    pub periods: f64,
    /// Constant pieces of the random law.
    #[arg(long, default_value_t = 10)]
    pub pieces: usize,
    /// Control signal JSON for `--signal file`.
    #[arg(long = "signal-file")]
    pub signal_file: Option<PathBuf>,
    /// Initial state `x,y,theta,alpha`.
    #[arg(long, value_parser = parse_state, default_value = "0,0,0,0", allow_hyphen_values = true)]
    pub z0: State,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct AnalyzeArgs {
    /// Grid points on each side of zero in `(-0.4, 0.4)` for the `X5`
    /// determinant.
    #[arg(long = "x5-points", default_value_t = 40)]
    pub x5_points: usize,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct SteerArgs {
    #[arg(long = "z-i", value_parser = parse_state, default_value = "0,0,0,0", allow_hyphen_values = true)]
    pub z_i: State,
    #[arg(long = "z-f", value_parser = parse_state, default_value = "0,0,0,0", allow_hyphen_values = true)]
    pub z_f: State,
    /// Field budget above the return-loop floor.
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Perturbation slots per component and phase.
    #[arg(long, default_value_t = 4)]
    pub intervals: usize,
    #[arg(long = "v-radius", default_value_t = 1e-3)]
    pub v_radius: f64,
    #[arg(long = "w-radius", default_value_t = 0.1)]
    pub w_radius: f64,
    #[arg(long = "max-iter", default_value_t = 50)]
    pub max_iter: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamField {
    L1,
    L2,
    Xi1,
    Xi2,
    Eta1,
    Eta2,
    M1,
    M2,
    Kappa,
}

/// `start:stop:count`, inclusive of both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + step * i as f64).collect()
    }
}

pub fn parse_range(s: &str) -> Result<Range, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err("expected start:stop:count".into());
    };
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    let count: usize = n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?;
    if count == 0 {
        return Err("count must be positive".into());
    }
    Ok(Range {
        start: num(a)?,
        stop: num(b)?,
        count,
    })
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long = "x-field", value_enum)]
    pub x_field: ParamField,
    #[arg(long = "x-range", value_parser = parse_range, allow_hyphen_values = true)]
    pub x_range: Range,
    #[arg(long = "y-field", value_enum)]
    pub y_field: ParamField,
    #[arg(long = "y-range", value_parser = parse_range, allow_hyphen_values = true)]
    pub y_range: Range,
    /// Skip the Gramian along the reference loop (the slowest check).
    #[arg(long = "no-gramian")]
    pub no_gramian: bool,
}
