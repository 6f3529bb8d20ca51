//! Return loops: a first-half control, followed by a second half that
//! retraces the same path back to the straight equilibrium.
//!
//! Retracing `z(t) = z(T - t)` on `[T/2, T]` requires
//! `2 F0 + (H_par* + H_par(T-t)) F1 + (H_perp* + H_perp(T-t)) F2 = 0`, which
//! projected on `X3`, `X4` gives
//!
//! ```text
//! H_perp*(t) = -2 kappa alpha / m2                                     - H_perp(T - t)
//! H_par*(t)  = -2 kappa (alpha / sin alpha) (m2 + m1 cos alpha) / (m1 m2) - H_par(T - t)
//! ```
//!
//! with `alpha = alpha*(T - t)` read off the first half.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use libm::{cos, sin};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rhs, Control, State};
use crate::params::SwimmerParams;
use crate::signal::ControlSignal;
use crate::sim::{integrate, IntegrateOptions, Trajectory};
use crate::tol::ALPHA_SERIES_CUTOFF;

/// `alpha / sin(alpha)`, by its series near zero.
pub fn alpha_over_sin(a: f64) -> f64 {
    if a.abs() < ALPHA_SERIES_CUTOFF {
        let a2 = a * a;
        1.0 + a2 / 6.0 + 7.0 * a2 * a2 / 360.0
    } else {
        a / sin(a)
    }
}

/// The state-dependent part of the second-half control.
pub fn return_feedback(p: &SwimmerParams, alpha: f64) -> Control {
    let perp = -2.0 * p.kappa * alpha / p.m2;
    let par = -2.0 * p.kappa * alpha_over_sin(alpha) * (p.m2 + p.m1 * cos(alpha)) / (p.m1 * p.m2);
    Control::new(par, perp)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnLoopConfig {
    /// Longest admissible loop duration.
    pub t_bar: f64,
    /// Largest admissible first-half field (sup over both components).
    pub h_bar: f64,
    pub opts: IntegrateOptions,
    /// Symmetry defect above which synthesis is declared failed.
    pub defect_limit: f64,
}

impl Default for ReturnLoopConfig {
    fn default() -> Self {
        ReturnLoopConfig {
            t_bar: 1.0,
            h_bar: 0.1,
            opts: IntegrateOptions::default(),
            defect_limit: 1e-9,
        }
    }
}

impl ReturnLoopConfig {
    /// Runs the worst constant field `(h_bar, h_bar)` (and its mirror
    /// `(h_bar, -h_bar)`) for `t_bar / 2` and checks the joint stays within
    /// `pi / 2`.
    pub fn probe(&self, p: &SwimmerParams) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for sign in [1.0, -1.0] {
            let sig = ControlSignal::constant(Control::new(self.h_bar, sign * self.h_bar), 0.5 * self.t_bar)?;
            let tr = integrate(p, &State::origin(), &sig, &IntegrateOptions::fast(self.opts.dt_max))?;
            worst = worst.max(tr.max_abs_alpha());
        }
        if worst > FRAC_PI_2 {
            return Err(Error::BudgetExceeded {
                what: "joint angle on probe run",
                value: worst,
                limit: FRAC_PI_2,
            });
        }
        Ok(worst)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnLoop {
    pub signal: ControlSignal,
    pub trajectory: Trajectory,
    pub sup_norm_par: f64,
    pub sup_norm_perp: f64,
    /// `max_t |z(t) - z(T - t)|` over mirrored sample pairs.
    pub symmetry_defect: f64,
    /// `|z(T) - O|`.
    pub closure: f64,
    /// `max |alpha| / |H|_inf` measured on the first half.
    pub k_prime: f64,
    pub k: f64,
    /// `|H|_inf` of the first half.
    pub h_norm: f64,
    pub bound_perp: f64,
    pub bound_par: f64,
}

impl ReturnLoop {
    pub fn duration(&self) -> f64 {
        self.signal.duration()
    }

    pub fn bounds_hold(&self) -> bool {
        let slack = 1e-12;
        self.sup_norm_perp <= self.bound_perp * (1.0 + slack) + slack
            && self.sup_norm_par <= self.bound_par * (1.0 + slack) + slack
    }
}

/// `k` large enough for both sup-norm bounds, given the measured
/// `k' = max |alpha| / |H|_inf`.
pub fn bound_constant(p: &SwimmerParams, k_prime: f64, h_bar: f64) -> f64 {
    let m12 = (p.m1 * p.m2).abs();
    let k_perp = 1.0 + 2.0 * p.kappa * k_prime / p.m2.abs();
    let kh = k_prime * k_prime * h_bar;
    let k_par = 1.0 + p.kappa * kh / m12 * ((p.m1 + p.m2).abs() + p.m1.abs() * (1.0 + kh * h_bar / 2.0));
    k_perp.max(k_par)
}

/// Builds the loop `[0, T]` with `T = 2 * first_half.duration()`.
pub fn synthesize_return(p: &SwimmerParams, first_half: &ControlSignal, cfg: &ReturnLoopConfig) -> Result<ReturnLoop> {
    p.check()?;
    let half = first_half.duration();
    let t_total = 2.0 * half;
    if t_total > cfg.t_bar * (1.0 + 1e-12) {
        return Err(Error::BudgetExceeded {
            what: "loop duration",
            value: t_total,
            limit: cfg.t_bar,
        });
    }
    let h_norm = first_half.sup_norm();
    if h_norm > cfg.h_bar * (1.0 + 1e-12) {
        return Err(Error::BudgetExceeded {
            what: "first-half field",
            value: h_norm,
            limit: cfg.h_bar,
        });
    }

    let first = integrate(p, &State::origin(), first_half, &cfg.opts)?;
    let max_alpha = first.max_abs_alpha();
    if max_alpha > FRAC_PI_2 {
        return Err(Error::BudgetExceeded {
            what: "joint angle",
            value: max_alpha,
            limit: FRAC_PI_2,
        });
    }

    let signal = first_half.concat(&mirror(p, &first)?);
    let trajectory = integrate(p, &State::origin(), &signal, &cfg.opts)?;
    let symmetry_defect = mirrored_defect(&trajectory, first.len())?;
    let closure = trajectory.final_state().distance(&State::origin());
    let (sup_norm_par, sup_norm_perp) = signal.sup_norms();
    let k_prime = if h_norm > 0.0 { max_alpha / h_norm } else { 0.0 };
    let k = bound_constant(p, k_prime, cfg.h_bar);
    let lp = ReturnLoop {
        signal,
        trajectory,
        sup_norm_par,
        sup_norm_perp,
        symmetry_defect,
        closure,
        k_prime,
        k,
        h_norm,
        bound_perp: k * h_norm,
        bound_par: p.parallel_field_floor() + k * h_norm,
    };
    if !(lp.symmetry_defect <= cfg.defect_limit) {
        return Err(Error::SynthesisFailure {
            defect: lp.symmetry_defect,
            limit: cfg.defect_limit,
        });
    }
    if !lp.bounds_hold() {
        let (component, value, bound) = if lp.sup_norm_perp > lp.bound_perp {
            ("h_perp", lp.sup_norm_perp, lp.bound_perp)
        } else {
            ("h_par", lp.sup_norm_par, lp.bound_par)
        };
        return Err(Error::BoundExceeded { component, value, bound });
    }
    Ok(lp)
}

/// Second-half signal from the first-half trajectory, one piece per
/// first-half step.
///
/// On each mirrored step the open-loop control is linear. Its mean is the
/// Simpson mean of the feedback term (with the joint angle at the step
/// midpoint from cubic Hermite interpolation), so that the piecewise-linear
/// approximation carries no `O(h^2)` bias.
fn mirror(p: &SwimmerParams, first: &Trajectory) -> Result<ControlSignal> {
    let sig = &first.signal;
    let t_half = sig.duration();
    let t_total = 2.0 * t_half;
    let n = first.len() - 1;
    let mut knots = Vec::with_capacity(n + 1);
    let mut starts = Vec::with_capacity(n);
    let mut ends = Vec::with_capacity(n);
    knots.push(0.0);
    for k in (0..n).rev() {
        let (t0, t1) = (first.times[k], first.times[k + 1]);
        let h = t1 - t0;
        let piece = sig.piece(sig.piece_index(0.5 * (t0 + t1)));
        let (u0, u1) = (piece.at(t0), piece.at(t1));
        let (z0, z1) = (first.states[k], first.states[k + 1]);
        let d0 = rhs(p, &z0, &u0)?[3];
        let d1 = rhs(p, &z1, &u1)?[3];
        let a_mid = 0.5 * (z0.alpha + z1.alpha) + h * (d0 - d1) / 8.0;
        let g0 = return_feedback(p, z0.alpha);
        let g1 = return_feedback(p, z1.alpha);
        let gm = return_feedback(p, a_mid);
        let mean = |a: f64, m: f64, b: f64| (a + 4.0 * m + b) / 6.0;
        let g_mean = Control::new(mean(g0.h_par, gm.h_par, g1.h_par), mean(g0.h_perp, gm.h_perp, g1.h_perp));
        // linear in forward time of the second half: starts at the mirror of t1
        let slope_half = (g0 - g1).lerp(&Control::ZERO, 0.5);
        let g_start = g_mean - slope_half;
        let g_end = g_mean + slope_half;
        starts.push(g_start - u1);
        ends.push(g_end - u0);
        knots.push(if k == 0 { t_half } else { t_total - t0 - t_half });
    }
    ControlSignal::piecewise_linear(knots, starts, ends)
}

/// `max |z(t_i) - z(T - t_i)|` over the first-half samples, pairing sample
/// `i` with sample `2 n - i` of the full trajectory.
fn mirrored_defect(traj: &Trajectory, first_len: usize) -> Result<f64> {
    let n = first_len - 1;
    if traj.len() != 2 * n + 1 {
        return Err(Error::SynthesisFailure {
            defect: f64::INFINITY,
            limit: 0.0,
        });
    }
    let t_total = traj.times[2 * n];
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let j = 2 * n - i;
        if (traj.times[i] + traj.times[j] - t_total).abs() > 1e-9 * t_total {
            return Err(Error::SynthesisFailure {
                defect: f64::INFINITY,
                limit: 0.0,
            });
        }
        worst = worst.max(traj.states[i].distance(&traj.states[j]));
    }
    Ok(worst)
}
