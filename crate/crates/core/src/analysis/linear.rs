//! Linearization along a trajectory and its controllability Gramian.

use alloc::vec::Vec;

use nalgebra::Matrix4x2;
use serde::{Deserialize, Serialize};

use super::sorted_symmetric_eigen;
use crate::error::{Error, Result};
use crate::model::{Control, Field, FieldFrame, Mat4};
use crate::params::SwimmerParams;
use crate::sim::Trajectory;
use crate::tol::{GRAMIAN_NOISE_FACTOR, GRAMIAN_RANK_RTOL};

/// `A(t)` and `B(t)` of the linearized system at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearizationSample {
    pub t: f64,
    pub a_mat: Mat4,
    pub b_mat: Matrix4x2<f64>,
}

fn sample(p: &SwimmerParams, t: f64, z: &crate::model::State, u: &Control) -> Result<LinearizationSample> {
    let frame = FieldFrame::new(p, &z.to_vector())?;
    Ok(LinearizationSample {
        t,
        a_mat: frame.rhs_jacobian(u)?,
        b_mat: Matrix4x2::from_columns(&[frame.value(Field::F1), frame.value(Field::F2)]),
    })
}

/// One sample per trajectory point; at interior knots of the signal two
/// samples share the time, carrying the left and the right limit of the
/// control.
pub fn linearize_along(p: &SwimmerParams, traj: &Trajectory) -> Result<Vec<LinearizationSample>> {
    let sig = &traj.signal;
    let knots = sig.knots();
    let interior = &knots[1..knots.len() - 1];
    let mut out = Vec::with_capacity(traj.len() + interior.len());
    for (&t, z) in traj.times.iter().zip(&traj.states) {
        if let Ok(k) = interior.binary_search_by(|s| s.total_cmp(&t)) {
            let left = sig.piece(k).at(t);
            out.push(sample(p, t, z, &left)?);
        }
        out.push(sample(p, t, z, &sig.eval(t))?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramianReport {
    pub rank: usize,
    /// Eigenvalues of the (symmetric) Gramian, descending.
    pub singular_values: Vec<f64>,
    /// Per-eigenvalue error estimate from a run at twice the step.
    pub error_estimates: Vec<f64>,
    pub sigma_min: f64,
    pub gramian: [[f64; 4]; 4],
}

fn lyapunov_rhs(w: &Mat4, a: &Mat4, b: &Matrix4x2<f64>) -> Mat4 {
    a * w + w * a.transpose() + b * b.transpose()
}

fn rk4(w: &Mat4, h: f64, a0: &Mat4, b0: &Matrix4x2<f64>, am: &Mat4, bm: &Matrix4x2<f64>, a1: &Mat4, b1: &Matrix4x2<f64>) -> Mat4 {
    let k1 = lyapunov_rhs(w, a0, b0);
    let k2 = lyapunov_rhs(&(w + k1 * (0.5 * h)), am, bm);
    let k3 = lyapunov_rhs(&(w + k2 * (0.5 * h)), am, bm);
    let k4 = lyapunov_rhs(&(w + k3 * h), a1, b1);
    w + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Four-point Lagrange value at the midpoint of `run[i]`, `run[i + 1]`.
fn midpoint(run: &[LinearizationSample], i: usize) -> (Mat4, Matrix4x2<f64>) {
    let n = run.len();
    if n < 4 {
        let (a, b) = (&run[i], &run[i + 1]);
        return ((a.a_mat + b.a_mat) * 0.5, (a.b_mat + b.b_mat) * 0.5);
    }
    let start = i.saturating_sub(1).min(n - 4);
    let pts = &run[start..start + 4];
    let t = 0.5 * (run[i].t + run[i + 1].t);
    let mut a = Mat4::zeros();
    let mut b = Matrix4x2::zeros();
    for (j, pj) in pts.iter().enumerate() {
        let mut w = 1.0;
        for (k, pk) in pts.iter().enumerate() {
            if k != j {
                w *= (t - pk.t) / (pj.t - pk.t);
            }
        }
        a += pj.a_mat * w;
        b += pj.b_mat * w;
    }
    (a, b)
}

/// Integrates `W' = A W + W A^T + B B^T` over one run of strictly increasing
/// sample times. With `coarse`, pairs of equal steps are merged so that the
/// shared sample is an exact midpoint.
fn integrate_run(w: &mut Mat4, run: &[LinearizationSample], coarse: bool) {
    let mut i = 0;
    while i + 1 < run.len() {
        if coarse && i + 2 < run.len() {
            let (h1, h2) = (run[i + 1].t - run[i].t, run[i + 2].t - run[i + 1].t);
            if (h1 - h2).abs() <= 1e-9 * h1 {
                let (s0, sm, s1) = (&run[i], &run[i + 1], &run[i + 2]);
                *w = rk4(w, h1 + h2, &s0.a_mat, &s0.b_mat, &sm.a_mat, &sm.b_mat, &s1.a_mat, &s1.b_mat);
                i += 2;
                continue;
            }
        }
        let (am, bm) = midpoint(run, i);
        let (s0, s1) = (&run[i], &run[i + 1]);
        *w = rk4(w, s1.t - s0.t, &s0.a_mat, &s0.b_mat, &am, &bm, &s1.a_mat, &s1.b_mat);
        i += 1;
    }
}

fn gramian(runs: &[&[LinearizationSample]], coarse: bool) -> Mat4 {
    let mut w = Mat4::zeros();
    for run in runs {
        integrate_run(&mut w, run, coarse);
    }
    (w + w.transpose()) * 0.5
}

/// Controllability Gramian `int_{t0}^{t1} Phi(t1,s) B B^T Phi(t1,s)^T ds`
/// from linearization samples, and its numerical rank.
///
/// An eigenvalue counts as nonzero when it exceeds both
/// `GRAMIAN_RANK_RTOL * sigma_max` and `GRAMIAN_NOISE_FACTOR` times its own
/// discretization error estimate.
pub fn gramian_rank(samples: &[LinearizationSample], t0: f64, t1: f64) -> Result<GramianReport> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    let first = samples.iter().position(|s| close(s.t, t0) || s.t > t0);
    let last = samples.iter().rposition(|s| close(s.t, t1) || s.t < t1);
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) if t0 < t1 && f < l && close(samples[f].t, t0) && close(samples[l].t, t1) => (f, l),
        _ => return Err(Error::OutOfRange { t0, t1 }),
    };
    let window = &samples[first..=last];
    let mut runs: Vec<&[LinearizationSample]> = Vec::new();
    let mut start = 0;
    for i in 1..window.len() {
        if window[i].t <= window[i - 1].t {
            runs.push(&window[start..i]);
            start = i;
        }
    }
    runs.push(&window[start..]);

    let fine = gramian(&runs, false);
    let coarse = gramian(&runs, true);
    let (vals, vecs) = sorted_symmetric_eigen(fine);
    let diff = fine - coarse;
    let errors: Vec<f64> = vecs.iter().map(|v| (v.transpose() * diff * v)[(0, 0)].abs() / 15.0).collect();
    let sigma_max = vals[0].max(0.0);
    let rank = vals
        .iter()
        .zip(&errors)
        .filter(|(&s, &e)| s > GRAMIAN_RANK_RTOL * sigma_max && s > GRAMIAN_NOISE_FACTOR * e)
        .count();
    let mut g = [[0.0; 4]; 4];
    for (r, row) in g.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = fine[(r, c)];
        }
    }
    Ok(GramianReport {
        rank,
        sigma_min: vals[3],
        singular_values: vals,
        error_estimates: errors,
        gramian: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::State;
    use crate::signal::ControlSignal;
    use crate::sim::{integrate, IntegrateOptions};

    const P0: SwimmerParams = SwimmerParams::REFERENCE;

    #[test]
    fn knots_produce_left_and_right_samples() {
        let sig = ControlSignal::piecewise_constant(
            alloc::vec![0.0, 0.25, 0.5],
            alloc::vec![Control::new(0.0, 0.1), Control::new(1.0, -0.1)],
        )
        .unwrap();
        let tr = integrate(&P0, &State::origin(), &sig, &IntegrateOptions::with_dt(0.05)).unwrap();
        let s = linearize_along(&P0, &tr).unwrap();
        assert_eq!(s.len(), tr.len() + 1);
        let at: Vec<_> = s.iter().filter(|x| x.t == 0.25).collect();
        assert_eq!(at.len(), 2);
        assert_eq!(at[0].b_mat, at[1].b_mat);
        assert_ne!(at[0].a_mat, at[1].a_mat);
    }

    #[test]
    fn equilibrium_gramian_has_rank_two() {
        let sig = ControlSignal::zero(0.5).unwrap();
        let tr = integrate(&P0, &State::origin(), &sig, &IntegrateOptions::default()).unwrap();
        let s = linearize_along(&P0, &tr).unwrap();
        let g = gramian_rank(&s, 0.0, 0.5).unwrap();
        assert_eq!(g.rank, 2, "{:?} {:?}", g.singular_values, g.error_estimates);
    }

    #[test]
    fn constant_field_gramian_has_rank_four() {
        let sig = ControlSignal::constant(Control::new(0.0, 0.01), 0.5).unwrap();
        let tr = integrate(&P0, &State::origin(), &sig, &IntegrateOptions::default()).unwrap();
        let s = linearize_along(&P0, &tr).unwrap();
        let g = gramian_rank(&s, 0.0, 0.5).unwrap();
        assert_eq!(g.rank, 4, "{:?} {:?}", g.singular_values, g.error_estimates);
        assert!(g.sigma_min > 0.0);
    }

    #[test]
    fn window_must_hit_samples() {
        let sig = ControlSignal::zero(0.5).unwrap();
        let tr = integrate(&P0, &State::origin(), &sig, &IntegrateOptions::with_dt(0.1)).unwrap();
        let s = linearize_along(&P0, &tr).unwrap();
        assert!(gramian_rank(&s, 0.05, 0.5).is_err());
        assert!(gramian_rank(&s, 0.5, 0.5).is_err());
    }
}
