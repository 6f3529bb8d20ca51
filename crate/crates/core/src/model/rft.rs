//! Independent check on the mobility matrix: integrate the pointwise
//! resistive-force drag law along both links by Gauss–Legendre quadrature.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, sin};
use nalgebra::{Vector2, Vector4};

use super::State;
use crate::params::SwimmerParams;
use crate::tol::QUADRATURE_NODES;

/// Hydrodynamic loads on the two links, lab frame. Torques are taken about
/// the joint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HydroLoads {
    pub f1: Vector2<f64>,
    pub f2: Vector2<f64>,
    pub t1: f64,
    pub t2: f64,
}

impl HydroLoads {
    /// The four generalized components balanced by the mobility matrix:
    /// total force in the frame of link 1, total torque, torque on link 2.
    pub fn generalized(&self, z: &State) -> Vector4<f64> {
        let phi = z.theta + z.alpha;
        let total = self.f1 + self.f2;
        let (s, c) = (sin(phi), cos(phi));
        Vector4::new(
            c * total.x + s * total.y,
            -s * total.x + c * total.y,
            self.t1 + self.t2,
            self.t2,
        )
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Integrates drag forces and joint moments for the generalized velocity
/// `dz = (xdot, ydot, thetadot, alphadot)` at configuration `z`.
pub fn rft_quadrature_oracle(p: &SwimmerParams, z: &State, dz: &Vector4<f64>) -> HydroLoads {
    let rule = gauss_legendre(QUADRATURE_NODES);
    let (th, al) = (z.theta, z.alpha);
    let e1_par = Vector2::new(cos(th + al), sin(th + al));
    let e1_perp = Vector2::new(-sin(th + al), cos(th + al));
    let e2_par = Vector2::new(cos(th), sin(th));
    let e2_perp = Vector2::new(-sin(th), cos(th));
    let xdot = Vector2::new(dz[0], dz[1]);
    let (thdot, aldot) = (dz[2], dz[3]);

    let drag = |u: Vector2<f64>, par: Vector2<f64>, perp: Vector2<f64>, xi: f64, eta: f64| {
        -(par * (xi * u.dot(&par))) - perp * (eta * u.dot(&perp))
    };

    let mut loads = HydroLoads {
        f1: Vector2::zeros(),
        f2: Vector2::zeros(),
        t1: 0.0,
        t2: 0.0,
    };

    // Link 1, abscissa s in [0, l1] measured from the joint.
    let half1 = 0.5 * p.l1;
    for &(node, w) in &rule {
        let s = half1 * (node + 1.0);
        let u = xdot - e2_perp * (0.5 * p.l2 * thdot) - e1_perp * (s * (aldot + thdot));
        let f = drag(u, e1_par, e1_perp, p.xi1, p.eta1);
        let arm = -(e1_par * s);
        loads.f1 += f * (w * half1);
        loads.t1 += cross(arm, f) * w * half1;
    }

    // Link 2, abscissa s in [-l2/2, l2/2] measured from its midpoint.
    let half2 = 0.5 * p.l2;
    for &(node, w) in &rule {
        let s = half2 * node;
        let u = xdot + e2_perp * (s * thdot);
        let f = drag(u, e2_par, e2_perp, p.xi2, p.eta2);
        let arm = e2_par * (s + half2);
        loads.f2 += f * (w * half2);
        loads.t2 += cross(arm, f) * w * half2;
    }
    loads
}
