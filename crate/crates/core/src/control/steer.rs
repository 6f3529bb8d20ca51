//! End-point map and local steering around return loops.

use alloc::vec;
use alloc::vec::Vec;

use libm::tanh;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::return_loop::{synthesize_return, ReturnLoop, ReturnLoopConfig};
use crate::analysis::RankReport;
use crate::error::{Error, Result};
use crate::model::{Control, State, Vec4};
use crate::params::SwimmerParams;
use crate::signal::ControlSignal;
use crate::sim::{endpoint, integrate, IntegrateOptions};

/// Final state reached from `z0` under `sig`.
pub fn endpoint_map(p: &SwimmerParams, z0: &State, sig: &ControlSignal, opts: &IntegrateOptions) -> Result<State> {
    endpoint(p, z0, sig, opts)
}

/// Piecewise-constant perturbation channels: `intervals` equal slots on
/// `[t0, t1]`, two channels (`h_par`, `h_perp`) per slot, each of amplitude
/// `scale` per unit coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBasis {
    pub t0: f64,
    pub t1: f64,
    pub intervals: usize,
    pub scale: f64,
}

impl PerturbationBasis {
    pub fn new(t0: f64, t1: f64, intervals: usize) -> Self {
        PerturbationBasis {
            t0,
            t1,
            intervals,
            scale: 1.0,
        }
    }

    pub fn channels(&self) -> usize {
        2 * self.intervals
    }

    /// The perturbation itself, as a signal of the given duration.
    pub fn signal(&self, duration: f64, coeffs: &[f64]) -> Result<ControlSignal> {
        if coeffs.len() != self.channels() {
            return Err(Error::InvalidSignal("one coefficient per channel required"));
        }
        if !(0.0 <= self.t0 && self.t0 < self.t1 && self.t1 <= duration) || self.intervals == 0 {
            return Err(Error::InvalidSignal("perturbation window outside the signal"));
        }
        let mut knots = vec![0.0];
        let mut values = Vec::new();
        if self.t0 > 0.0 {
            knots.push(self.t0);
            values.push(Control::ZERO);
        }
        let w = (self.t1 - self.t0) / self.intervals as f64;
        for j in 0..self.intervals {
            knots.push(if j + 1 == self.intervals { self.t1 } else { self.t0 + w * (j + 1) as f64 });
            values.push(Control::new(coeffs[2 * j] * self.scale, coeffs[2 * j + 1] * self.scale));
        }
        if self.t1 < duration {
            knots.push(duration);
            values.push(Control::ZERO);
        }
        ControlSignal::piecewise_constant(knots, values)
    }

    pub fn perturb(&self, base: &ControlSignal, coeffs: &[f64]) -> Result<ControlSignal> {
        base.add(&self.signal(base.duration(), coeffs)?)
    }
}

/// Central-difference derivative of the end-point map along each channel,
/// at coefficients `coeffs`, with coefficient step `step`.
pub fn endpoint_jacobian_at(
    p: &SwimmerParams,
    z0: &State,
    base: &ControlSignal,
    basis: &PerturbationBasis,
    coeffs: &[f64],
    step: f64,
    opts: &IntegrateOptions,
) -> Result<DMatrix<f64>> {
    let n = basis.channels();
    let mut j = DMatrix::zeros(4, n);
    let mut c = coeffs.to_vec();
    for i in 0..n {
        c[i] = coeffs[i] + step;
        let plus = endpoint(p, z0, &basis.perturb(base, &c)?, opts)?;
        c[i] = coeffs[i] - step;
        let minus = endpoint(p, z0, &basis.perturb(base, &c)?, opts)?;
        c[i] = coeffs[i];
        let col = plus.delta(&minus) / (2.0 * step);
        j.set_column(i, &col);
    }
    Ok(j)
}

/// Jacobian of the end-point map at the unperturbed signal, channel step
/// `1e-6`.
pub fn endpoint_jacobian(
    p: &SwimmerParams,
    z0: &State,
    base: &ControlSignal,
    basis: &PerturbationBasis,
    opts: &IntegrateOptions,
) -> Result<DMatrix<f64>> {
    endpoint_jacobian_at(p, z0, base, basis, &vec![0.0; basis.channels()], 1e-6, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringConfig {
    /// Constant perpendicular field of the reference loops.
    pub beta: f64,
    /// Perturbation slots per control component and phase.
    pub intervals: usize,
    /// Radius of the neighbourhood the end points must lie in.
    pub v_radius: f64,
    /// Radius of the neighbourhood the whole motion must stay in.
    pub w_radius: f64,
    pub max_iter: usize,
    pub residual_tol: f64,
    /// Initial Levenberg parameter.
    pub lambda0: f64,
    pub opts: IntegrateOptions,
    pub loop_config: ReturnLoopConfig,
}

impl Default for SteeringConfig {
    fn default() -> Self {
        SteeringConfig {
            beta: 0.01,
            intervals: 4,
            v_radius: 1e-3,
            w_radius: 0.1,
            max_iter: 50,
            residual_tol: 1e-6,
            lambda0: 1e-3,
            opts: IntegrateOptions::fast(1e-3),
            loop_config: ReturnLoopConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringProblem {
    pub z_i: State,
    pub z_f: State,
    pub horizon: f64,
    pub epsilon: f64,
    pub config: SteeringConfig,
}

impl SteeringProblem {
    pub fn new(z_i: State, z_f: State, horizon: f64, epsilon: f64) -> Self {
        SteeringProblem {
            z_i,
            z_f,
            horizon,
            epsilon,
            config: SteeringConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub start: State,
    pub target: State,
    pub achieved: State,
    pub coefficients: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Smallest singular value of the end-point Jacobian at the reference;
    /// NaN when no solve was needed.
    pub jacobian_sigma_min: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteeringReport {
    pub signal: ControlSignal,
    pub z_i: State,
    pub z_f: State,
    pub horizon: f64,
    pub epsilon: f64,
    /// End point of an independent re-integration of `signal` from `z_i`.
    pub achieved: State,
    pub residual: f64,
    pub sup_norm_par: f64,
    pub sup_norm_perp: f64,
    pub bound_par: f64,
    pub bound_perp: f64,
    /// Largest distance from `O` along the re-integrated motion.
    pub max_excursion: f64,
    pub phases: [PhaseReport; 2],
    pub converged: bool,
    pub bounds_ok: bool,
    pub inside_w: bool,
}

impl SteeringReport {
    pub fn iterations(&self) -> usize {
        self.phases[0].iterations + self.phases[1].iterations
    }

    pub fn pass(&self) -> bool {
        self.converged && self.bounds_ok && self.inside_w
    }
}

fn svd_sigma_min(j: &DMatrix<f64>) -> f64 {
    j.clone().svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Smallest Levenberg parameter.
const LAMBDA_MIN: f64 = 1e-10;

/// Relative singular-value cutoff for the reference end-point Jacobian.
const JACOBIAN_RANK_RTOL: f64 = 1e-12;

/// Per-channel amplitude available on top of `base` before the field bounds
/// `(bound_par, bound_perp)` are reached, with a safety factor.
fn channel_amplitudes(base: &ControlSignal, basis: &PerturbationBasis, bound_par: f64, bound_perp: f64) -> Result<Vec<f64>> {
    let w = (basis.t1 - basis.t0) / basis.intervals as f64;
    let mut amp = Vec::with_capacity(basis.channels());
    for j in 0..basis.intervals {
        let a = basis.t0 + w * j as f64;
        let slot = base.window(a, a + w)?;
        let (par, perp) = slot.sup_norms();
        amp.push(0.98 * (bound_par - par));
        amp.push(0.98 * (bound_perp - perp));
    }
    if amp.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::BoundExceeded {
            component: "reference loop",
            value: base.sup_norm(),
            bound: bound_perp,
        });
    }
    Ok(amp)
}

/// Bounded channel coefficients `amp * tanh(w / amp)`.
fn squash(w: &[f64], amp: &[f64]) -> Vec<f64> {
    w.iter().zip(amp).map(|(&x, &a)| a * tanh(x / a)).collect()
}

struct Solved {
    w: Vec<f64>,
    r: Vec4,
    reached: State,
    iterations: usize,
}

struct Phase<'a> {
    p: &'a SwimmerParams,
    start: State,
    base: &'a ControlSignal,
    basis: PerturbationBasis,
    amp: Vec<f64>,
    cfg: &'a SteeringConfig,
}

impl Phase<'_> {
    fn signal(&self, w: &[f64]) -> Result<ControlSignal> {
        self.basis.perturb(self.base, &squash(w, &self.amp))
    }

    fn endpoint(&self, w: &[f64]) -> Result<State> {
        endpoint(self.p, &self.start, &self.signal(w)?, &self.cfg.opts)
    }

    fn jacobian(&self, w: &[f64]) -> Result<DMatrix<f64>> {
        let h = 1e-6;
        let mut j = DMatrix::zeros(4, w.len());
        let mut x = w.to_vec();
        for i in 0..w.len() {
            x[i] = w[i] + h;
            let plus = self.endpoint(&x)?;
            x[i] = w[i] - h;
            let minus = self.endpoint(&x)?;
            x[i] = w[i];
            j.set_column(i, &(plus.delta(&minus) / (2.0 * h)));
        }
        Ok(j)
    }

    fn excursion(&self, w: &[f64]) -> Result<f64> {
        let tr = integrate(self.p, &self.start, &self.signal(w)?, &self.cfg.opts)?;
        Ok(tr.states.iter().fold(0.0_f64, |m, z| m.max(z.norm_from_origin())))
    }

    /// Damped Newton (Levenberg) from `w`: `lambda` starts at `lambda0`, is
    /// divided by 10 on success down to `1e-10` and multiplied by 10 on
    /// failure; each trial step is halved up to four times before the damping
    /// is raised.
    fn levenberg(&self, mut w: Vec<f64>, target: &State, tol: f64) -> Result<Solved> {
        let n = w.len();
        let mut reached = self.endpoint(&w)?;
        let mut r = reached.delta(target);
        let mut lambda = self.cfg.lambda0;
        let mut iterations = 0;
        while r.norm() >= tol && iterations < self.cfg.max_iter {
            iterations += 1;
            let jac = self.jacobian(&w)?;
            let jt = jac.transpose();
            let g = &jt * DVector::from_column_slice(r.as_slice());
            let jtj = &jt * &jac;
            let mut improved = false;
            for _ in 0..12 {
                let Some(ch) = (&jtj + DMatrix::identity(n, n) * lambda).cholesky() else {
                    lambda *= 10.0;
                    continue;
                };
                let delta = ch.solve(&(-&g));
                let mut s = 1.0;
                for _ in 0..5 {
                    let trial: Vec<f64> = w.iter().zip(delta.iter()).map(|(wi, di)| wi + s * di).collect();
                    if let Ok(zt) = self.endpoint(&trial) {
                        let rt = zt.delta(target);
                        if rt.norm() < r.norm() {
                            w = trial;
                            r = rt;
                            reached = zt;
                            improved = true;
                            break;
                        }
                    }
                    s *= 0.5;
                }
                if improved {
                    lambda = (lambda / 10.0).max(LAMBDA_MIN);
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        Ok(Solved { w, r, reached, iterations })
    }
}

/// Solves one phase by damped Newton from the unperturbed loop. A solution
/// whose motion leaves the `w_radius` ball is reported as not converged.
#[allow(clippy::too_many_arguments)]
fn solve_phase(
    p: &SwimmerParams,
    start: &State,
    target: &State,
    base: &ControlSignal,
    basis: &PerturbationBasis,
    bounds: (f64, f64),
    cfg: &SteeringConfig,
    tol: f64,
) -> Result<PhaseReport> {
    let phase = Phase {
        p,
        start: *start,
        base,
        basis: *basis,
        amp: channel_amplitudes(base, basis, bounds.0, bounds.1)?,
        cfg,
    };
    let w0 = vec![0.0; basis.channels()];
    let jacobian_sigma_min = svd_sigma_min(&phase.jacobian(&w0)?);
    let s = phase.levenberg(w0, target, tol)?;
    let converged = s.r.norm() < tol && phase.excursion(&s.w)? <= cfg.w_radius;
    Ok(PhaseReport {
        start: *start,
        target: *target,
        achieved: s.reached,
        coefficients: squash(&s.w, &phase.amp),
        residual: s.r.norm(),
        iterations: s.iterations,
        converged,
        jacobian_sigma_min,
    })
}

/// Reference loop for one phase of duration `t_phase`: constant field
/// `(0, beta)` on the first half, then the return.
pub fn reference_loop(p: &SwimmerParams, t_phase: f64, beta: f64, cfg: &ReturnLoopConfig) -> Result<ReturnLoop> {
    let h = ControlSignal::constant(Control::new(0.0, beta), 0.5 * t_phase)?;
    synthesize_return(p, &h, cfg)
}

/// Steers `z_i` to `O` on `[0, T/2]` and `O` to `z_f` on `[T/2, T]`, each
/// by perturbing a reference return loop, then re-integrates the whole
/// signal from `z_i` to check the result.
///
/// Non-convergence is reported in the returned report; a converged answer
/// that violates the field bounds is an error.
pub fn steer(p: &SwimmerParams, prob: &SteeringProblem) -> Result<SteeringReport> {
    let cfg = &prob.config;
    let o = State::origin();
    for z in [&prob.z_i, &prob.z_f] {
        let d = z.distance(&o);
        if d > cfg.v_radius {
            return Err(Error::OutsideNeighborhood {
                distance: d,
                radius: cfg.v_radius,
            });
        }
    }
    if cfg.intervals * 2 < 4 {
        return Err(Error::RankDeficient {
            rank: cfg.intervals * 2,
            required: 4,
        });
    }
    let (signal, phases) = if prob.z_i == o && prob.z_f == o {
        // The equilibrium is reached by doing nothing.
        let idle = PhaseReport {
            start: o,
            target: o,
            achieved: o,
            coefficients: Vec::new(),
            residual: 0.0,
            iterations: 0,
            converged: true,
            jacobian_sigma_min: f64::NAN,
        };
        (ControlSignal::zero(prob.horizon)?, [idle.clone(), idle])
    } else {
        solve_phases(p, prob)?
    };
    verify(p, prob, signal, phases)
}

fn solve_phases(p: &SwimmerParams, prob: &SteeringProblem) -> Result<(ControlSignal, [PhaseReport; 2])> {
    let cfg = &prob.config;
    let o = State::origin();
    let t_phase = 0.5 * prob.horizon;
    let reference = reference_loop(p, t_phase, cfg.beta, &cfg.loop_config)?;
    let base = &reference.signal;
    let basis = PerturbationBasis::new(0.0, t_phase, cfg.intervals);
    let tol = 0.25 * cfg.residual_tol;
    let rank = RankReport::from_matrix(endpoint_jacobian(p, &o, base, &basis, &cfg.opts)?, JACOBIAN_RANK_RTOL).rank;
    if rank < 4 {
        return Err(Error::RankDeficient { rank, required: 4 });
    }

    let bounds = (p.parallel_field_floor() + prob.epsilon, prob.epsilon);
    let first = solve_phase(p, &prob.z_i, &o, base, &basis, bounds, cfg, tol)?;
    let second = solve_phase(p, &first.achieved, &prob.z_f, base, &basis, bounds, cfg, tol)?;
    let signal = basis
        .perturb(base, &first.coefficients)?
        .concat(&basis.perturb(base, &second.coefficients)?);
    Ok((signal, [first, second]))
}

/// Re-integrates `signal` from `z_i` and assembles the report.
fn verify(p: &SwimmerParams, prob: &SteeringProblem, signal: ControlSignal, phases: [PhaseReport; 2]) -> Result<SteeringReport> {
    let cfg = &prob.config;
    let o = State::origin();
    let check = integrate(p, &prob.z_i, &signal, &cfg.opts)?;
    let achieved = check.final_state();
    let residual = achieved.distance(&prob.z_f);
    let max_excursion = check.states.iter().fold(0.0_f64, |m, z| m.max(z.distance(&o)));
    let (sup_norm_par, sup_norm_perp) = signal.sup_norms();
    let bound_perp = prob.epsilon;
    let bound_par = p.parallel_field_floor() + prob.epsilon;
    let converged = phases.iter().all(|ph| ph.converged) && residual < cfg.residual_tol;
    let bounds_ok = sup_norm_perp < bound_perp && sup_norm_par < bound_par;
    let report = SteeringReport {
        signal,
        z_i: prob.z_i,
        z_f: prob.z_f,
        horizon: prob.horizon,
        epsilon: prob.epsilon,
        achieved,
        residual,
        sup_norm_par,
        sup_norm_perp,
        bound_par,
        bound_perp,
        max_excursion,
        phases,
        converged,
        bounds_ok,
        inside_w: max_excursion <= cfg.w_radius,
    };
    if converged && !bounds_ok {
        let (component, value, bound) = if sup_norm_perp >= bound_perp {
            ("h_perp", sup_norm_perp, bound_perp)
        } else {
            ("h_par", sup_norm_par, bound_par)
        };
        return Err(Error::BoundExceeded { component, value, bound });
    }
    Ok(report)
}


#[cfg(test)]
mod tests {
    use super::*;

    const P0: SwimmerParams = SwimmerParams::REFERENCE;

    fn beta_loop(beta: f64) -> ReturnLoop {
        reference_loop(&P0, 0.5, beta, &ReturnLoopConfig::default()).unwrap()
    }

    #[test]
    fn trivial_problem_needs_no_iteration() {
        let r = steer(&P0, &SteeringProblem::new(State::origin(), State::origin(), 1.0, 0.2)).unwrap();
        assert!(r.pass());
        assert_eq!(r.iterations(), 0);
        assert_eq!(r.signal.sup_norm(), 0.0);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn jacobian_rank_around_loops() {
        let basis = PerturbationBasis::new(0.0, 0.5, 4);
        let opts = IntegrateOptions::fast(1e-3);
        let o = State::origin();
        let lp = beta_loop(0.01);
        let j = endpoint_jacobian(&P0, &o, &lp.signal, &basis, &opts).unwrap();
        assert_eq!(RankReport::from_matrix(j.clone(), JACOBIAN_RANK_RTOL).rank, 4);
        let j2 = endpoint_jacobian_at(&P0, &o, &lp.signal, &basis, &[0.0; 8], 2e-6, &opts).unwrap();
        assert!((&j2 - &j).amax() < 0.01 * j.amax());

        let null = beta_loop(0.0);
        let j0 = endpoint_jacobian(&P0, &o, &null.signal, &basis, &opts).unwrap();
        assert!(RankReport::from_matrix(j0, 1e-9).rank <= 2);
    }

    #[test]
    fn null_loop_refuses_to_steer() {
        let mut prob = SteeringProblem::new(State::origin(), State::new(0.0, 0.0, 1e-4, 0.0), 1.0, 0.2);
        prob.config.beta = 0.0;
        assert!(matches!(steer(&P0, &prob), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn targets_outside_the_neighbourhood_are_refused() {
        let prob = SteeringProblem::new(State::origin(), State::new(2e-3, 0.0, 0.0, 0.0), 1.0, 0.2);
        assert!(matches!(steer(&P0, &prob), Err(Error::OutsideNeighborhood { .. })));
    }

    #[test]
    fn steers_along_first_order_directions_both_ways() {
        let z = State::new(0.0, 2e-4, 4e-4, 0.0);
        for (a, b) in [(State::origin(), z), (z, State::origin())] {
            let r = steer(&P0, &SteeringProblem::new(a, b, 1.0, 0.2)).unwrap();
            assert!(r.pass(), "{a:?} -> {b:?}: residual {}", r.residual);
            let again = endpoint(&P0, &a, &r.signal, &IntegrateOptions::fast(1e-3)).unwrap();
            assert!(again.distance(&b) < 1e-6);
            assert!(r.sup_norm_perp < 0.2 && r.sup_norm_par < 3.2);
            assert!(r.max_excursion <= 0.1);
        }
    }
}
