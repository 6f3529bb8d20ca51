//! Fixed-step RK4 integration of the swimmer under a control signal.
//!
//! Each signal piece is split into equal sub-steps no longer than `dt_max`,
//! so the integrator never straddles a discontinuity of the control. The
//! step-doubling error estimate is optional and does not alter the solution.

use alloc::vec::Vec;

use libm::{ceil, cos, log2, sin};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rhs_vec, wrap_angle, Control, State, Vec4};
use crate::params::SwimmerParams;
use crate::signal::{ControlSignal, Piece};
use crate::tol::{DEFAULT_DT_MAX, DEFAULT_STEP_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub dt_max: f64,
    /// Target for the step-doubling estimate; only reported, never enforced
    /// by adapting the step.
    pub tol: f64,
    pub error_estimate: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            dt_max: DEFAULT_DT_MAX,
            tol: DEFAULT_STEP_TOL,
            error_estimate: true,
        }
    }
}

impl IntegrateOptions {
    pub fn with_dt(dt_max: f64) -> Self {
        IntegrateOptions {
            dt_max,
            ..Self::default()
        }
    }

    pub fn fast(dt_max: f64) -> Self {
        IntegrateOptions {
            dt_max,
            tol: DEFAULT_STEP_TOL,
            error_estimate: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub steps: usize,
    pub max_step: f64,
    /// Largest per-step local error estimate (step doubling, max-norm);
    /// zero when the estimate was not requested.
    pub local_error: f64,
    /// Sum of the per-step estimates, a crude global bound.
    pub accumulated_error: f64,
    pub within_tol: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub signal: ControlSignal,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn final_state(&self) -> State {
        self.states[self.states.len() - 1]
    }

    pub fn initial_state(&self) -> State {
        self.states[0]
    }

    /// Control applied at each sample (right limit, left limit at the end).
    pub fn controls(&self) -> Vec<Control> {
        self.times.iter().map(|&t| self.signal.eval(t)).collect()
    }

    pub fn max_abs_alpha(&self) -> f64 {
        self.states.iter().fold(0.0, |m, z| m.max(z.alpha.abs()))
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn rk4_step(p: &SwimmerParams, piece: &Piece, t: f64, h: f64, z: &Vec4) -> Result<Vec4> {
    let half = 0.5 * h;
    let u0 = piece.at(t);
    let um = piece.at(t + half);
    let u1 = piece.at(t + h);
    // a non-finite stage is a blow-up of this step, not a modelling error
    let f = |z: &Vec4, u: &Control| {
        if z.iter().all(|v| v.is_finite()) {
            rhs_vec(p, z, u)
        } else {
            Err(Error::Divergence { t: t + h })
        }
    };
    let k1 = f(z, &u0)?;
    let k2 = f(&(z + k1 * half), &um)?;
    let k3 = f(&(z + k2 * half), &um)?;
    let k4 = f(&(z + k3 * h), &u1)?;
    Ok(z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

fn wrapped(v: &Vec4) -> Vec4 {
    Vec4::new(v[0], v[1], wrap_angle(v[2]), wrap_angle(v[3]))
}

fn check_inputs(z0: &State, opts: &IntegrateOptions) -> Result<()> {
    if !(opts.dt_max > 0.0 && opts.dt_max.is_finite()) {
        return Err(Error::InvalidSignal("dt_max must be positive and finite"));
    }
    if !z0.is_finite() {
        return Err(Error::Divergence { t: 0.0 });
    }
    Ok(())
}

/// Marches the state across the whole signal, calling `visit` after every
/// step with the time and the (wrapped) state.
fn march(
    p: &SwimmerParams,
    z0: &State,
    signal: &ControlSignal,
    opts: &IntegrateOptions,
    mut visit: impl FnMut(f64, &Vec4),
) -> Result<StepStats> {
    check_inputs(z0, opts)?;
    let mut z = z0.to_vector();
    let mut stats = StepStats::default();
    for piece in signal.pieces() {
        let len = piece.t1 - piece.t0;
        // a hair of slack so that mirrored or re-based pieces of length
        // dt_max * (1 + eps) are not split in two
        let n = (ceil(len / opts.dt_max * (1.0 - 1e-12)) as usize).max(1);
        let h = len / n as f64;
        stats.max_step = stats.max_step.max(h);
        for k in 0..n {
            let t = piece.t0 + h * k as f64;
            let next = rk4_step(p, &piece, t, h, &z)?;
            if opts.error_estimate {
                let mid = rk4_step(p, &piece, t, 0.5 * h, &z)?;
                let fine = rk4_step(p, &piece, t + 0.5 * h, 0.5 * h, &mid)?;
                let mut diff = next - fine;
                diff[2] = wrap_angle(diff[2]);
                diff[3] = wrap_angle(diff[3]);
                let est = diff.amax() / 15.0;
                stats.local_error = stats.local_error.max(est);
                stats.accumulated_error += est;
            }
            z = wrapped(&next);
            let t_next = if k + 1 == n { piece.t1 } else { t + h };
            if !z.iter().all(|v| v.is_finite()) {
                return Err(Error::Divergence { t: t_next });
            }
            stats.steps += 1;
            visit(t_next, &z);
        }
    }
    stats.within_tol = stats.accumulated_error <= opts.tol;
    Ok(stats)
}

/// Integrates from `z0` over the full duration of `signal`, storing every
/// step.
pub fn integrate(
    p: &SwimmerParams,
    z0: &State,
    signal: &ControlSignal,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    let mut times = alloc::vec![0.0];
    let mut states = alloc::vec![*z0];
    let stats = march(p, z0, signal, opts, |t, z| {
        times.push(t);
        states.push(State::from_vector(z));
    })?;
    Ok(Trajectory {
        times,
        states,
        signal: signal.clone(),
        stats,
    })
}

/// Final state only; bit-identical to `integrate(..).final_state()` with the
/// same options.
pub fn endpoint(p: &SwimmerParams, z0: &State, signal: &ControlSignal, opts: &IntegrateOptions) -> Result<State> {
    let mut last = z0.to_vector();
    march(p, z0, signal, opts, |_, z| last = *z)?;
    Ok(State::from_vector(&last))
}

/// Rigid motion of the plane: positions are shifted by `(dx, dy)` and then
/// rotated by `dtheta` about the origin; headings gain `dtheta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameTransform {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

impl FrameTransform {
    pub const IDENTITY: FrameTransform = FrameTransform {
        dx: 0.0,
        dy: 0.0,
        dtheta: 0.0,
    };

    pub fn new(dx: f64, dy: f64, dtheta: f64) -> Self {
        FrameTransform { dx, dy, dtheta }
    }

    /// The transform sending the straight state at the origin with zero
    /// heading to the position and heading of `z`.
    pub fn placing(z: &State) -> Self {
        let (s, c) = (sin(z.theta), cos(z.theta));
        FrameTransform::new(c * z.x + s * z.y, -s * z.x + c * z.y, z.theta)
    }

    pub fn apply(&self, z: &State) -> State {
        let (s, c) = (sin(self.dtheta), cos(self.dtheta));
        let (x, y) = (z.x + self.dx, z.y + self.dy);
        State::new(c * x - s * y, s * x + c * y, z.theta + self.dtheta, z.alpha)
    }

    pub fn inverse(&self) -> FrameTransform {
        let (s, c) = (sin(self.dtheta), cos(self.dtheta));
        FrameTransform {
            dx: -(c * self.dx - s * self.dy),
            dy: -(s * self.dx + c * self.dy),
            dtheta: -self.dtheta,
        }
    }
}

pub fn transform_trajectory(traj: &Trajectory, g: &FrameTransform) -> Trajectory {
    Trajectory {
        times: traj.times.clone(),
        states: traj.states.iter().map(|z| g.apply(z)).collect(),
        signal: traj.signal.clone(),
        stats: traj.stats,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub dts: [f64; 3],
    /// Endpoint errors against a run at `dt / 64`.
    pub errors: [f64; 3],
    /// Mean of the two successive `log2` error ratios; `None` when every
    /// error is zero (the signal is integrated exactly).
    pub order: Option<f64>,
}

/// Empirical order of the integrator at steps `dt`, `dt/2`, `dt/4`.
pub fn convergence_order(p: &SwimmerParams, z0: &State, signal: &ControlSignal, dt: f64) -> Result<ConvergenceReport> {
    let reference = endpoint(p, z0, signal, &IntegrateOptions::fast(dt / 64.0))?;
    let dts = [dt, dt / 2.0, dt / 4.0];
    let mut errors = [0.0; 3];
    for (e, &h) in errors.iter_mut().zip(dts.iter()) {
        *e = endpoint(p, z0, signal, &IntegrateOptions::fast(h))?.distance(&reference);
    }
    let order = if errors.iter().all(|&e| e == 0.0) {
        None
    } else {
        let r1 = log2(errors[0] / errors[1]);
        let r2 = log2(errors[1] / errors[2]);
        Some(0.5 * (r1 + r2))
    };
    Ok(ConvergenceReport { dts, errors, order })
}
