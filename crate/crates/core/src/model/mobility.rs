use libm::{cos, sin};
use nalgebra::{Matrix2, Matrix4, Vector4, LU, U4};

use crate::error::{Error, Result};
use crate::params::SwimmerParams;
use crate::tol::ALGEBRAIC_RTOL;

/// `E(alpha)` together with its determinant and the two columns of its
/// inverse that carry the actuation (`X3`, `X4`, rotating basis).
#[derive(Clone, Debug)]
pub struct MobilityDecomposition {
    pub alpha: f64,
    pub e_mat: Matrix4<f64>,
    pub det_e: f64,
    pub x3: Vector4<f64>,
    pub x4: Vector4<f64>,
    lu: LU<f64, U4, U4>,
}

impl MobilityDecomposition {
    /// Solves `E(alpha) v = rhs`.
    pub fn solve(&self, rhs: &Vector4<f64>) -> Result<Vector4<f64>> {
        self.lu
            .solve(rhs)
            .ok_or(Error::SingularMobility { alpha: self.alpha })
    }
}

fn drag_weights(p: &SwimmerParams) -> Matrix2<f64> {
    Matrix2::new(
        p.eta1 * p.l1 * p.l1,
        p.eta2 * p.l2 * p.l2,
        0.0,
        p.eta2 * p.l2 * p.l2,
    )
}

fn set_block(m: &mut Matrix4<f64>, row: usize, col: usize, b: &Matrix2<f64>) {
    m.fixed_view_mut::<2, 2>(row, col).copy_from(b);
}

/// Assembles `E(alpha)` block by block.
pub fn e_matrix_raw(p: &SwimmerParams, alpha: f64) -> Matrix4<f64> {
    e_matrix_sc(p, sin(alpha), cos(alpha))
}

/// `E` is affine in `(sin alpha, cos alpha)`; `(E0, Ec, Es)` with
/// `E(alpha) = E0 + cos(alpha) Ec + sin(alpha) Es`.
pub fn e_matrix_trig_parts(p: &SwimmerParams) -> (Matrix4<f64>, Matrix4<f64>, Matrix4<f64>) {
    let e0 = e_matrix_sc(p, 0.0, 0.0);
    (e0, e_matrix_sc(p, 0.0, 1.0) - e0, e_matrix_sc(p, 1.0, 0.0) - e0)
}

fn e_matrix_sc(p: &SwimmerParams, s: f64, c: f64) -> Matrix4<f64> {
    let (l1, l2) = (p.l1, p.l2);
    let k = drag_weights(p);

    let e11 = Matrix2::new(
        -(p.xi1 * l1 + p.xi2 * l2) * c,
        -(p.xi1 * l1 + p.eta2 * l2) * s,
        (p.eta1 * l1 + p.xi2 * l2) * s,
        -(p.eta1 * l1 + p.eta2 * l2) * c,
    );
    let e12 = Matrix2::new(
        0.5 * p.xi1 * l1 * l2 * s,
        0.0,
        0.5 * p.eta1 * l1 * (l1 + l2 * c),
        0.5 * p.eta1 * l1 * l1,
    );
    let e21 = k * Matrix2::new(-s, c, 0.0, -1.0) * 0.5;
    let e22 = -(k * Matrix2::new(0.25 * l2 * c + l1 / 3.0, l1 / 3.0, l2 / 12.0, 0.0));

    let mut m = Matrix4::zeros();
    set_block(&mut m, 0, 0, &e11);
    set_block(&mut m, 0, 2, &e12);
    set_block(&mut m, 2, 0, &e21);
    set_block(&mut m, 2, 2, &e22);
    m
}

/// Entrywise derivative `dE/dalpha`.
pub fn e_matrix_derivative(p: &SwimmerParams, alpha: f64) -> Matrix4<f64> {
    let (s, c) = (sin(alpha), cos(alpha));
    let (l1, l2) = (p.l1, p.l2);
    let k = drag_weights(p);

    let d11 = Matrix2::new(
        (p.xi1 * l1 + p.xi2 * l2) * s,
        -(p.xi1 * l1 + p.eta2 * l2) * c,
        (p.eta1 * l1 + p.xi2 * l2) * c,
        (p.eta1 * l1 + p.eta2 * l2) * s,
    );
    let d12 = Matrix2::new(0.5 * p.xi1 * l1 * l2 * c, 0.0, -0.5 * p.eta1 * l1 * l2 * s, 0.0);
    let d21 = k * Matrix2::new(-c, -s, 0.0, 0.0) * 0.5;
    let d22 = -(k * Matrix2::new(-0.25 * l2 * s, 0.0, 0.0, 0.0));

    let mut m = Matrix4::zeros();
    set_block(&mut m, 0, 0, &d11);
    set_block(&mut m, 0, 2, &d12);
    set_block(&mut m, 2, 0, &d21);
    set_block(&mut m, 2, 2, &d22);
    m
}

/// Closed-form determinant of `E(alpha)`; strictly negative for valid
/// parameters.
pub fn det_closed_form(p: &SwimmerParams, alpha: f64) -> f64 {
    let (s, c) = (sin(alpha), cos(alpha));
    let (l1, l2) = (p.l1, p.l2);
    let cubes = l1 * l1 * l1 * l2 * l2 * l2;
    let cos_term = 0.25 * (p.xi1 * l1 + p.xi2 * l2) * (p.eta1 * l1 + p.eta2 * l2) * c * c;
    let sin_term = (p.xi1 * l1 + 0.25 * p.eta2 * l2) * (0.25 * p.eta1 * l1 + p.xi2 * l2) * s * s;
    -p.eta1 * p.eta2 * cubes / 9.0 * (cos_term + sin_term)
}

/// Builds the mobility decomposition at `alpha`.
///
/// The determinant is obtained twice (LU and closed form); a mismatch beyond
/// [`ALGEBRAIC_RTOL`] is reported as [`Error::Inconsistent`].
pub fn e_matrix(p: &SwimmerParams, alpha: f64) -> Result<MobilityDecomposition> {
    let e_mat = e_matrix_raw(p, alpha);
    let lu = e_mat.lu();
    let det_lu = lu.determinant();
    let det_e = det_closed_form(p, alpha);
    let discrepancy = (det_lu - det_e).abs() / det_e.abs();
    if !(discrepancy <= ALGEBRAIC_RTOL) {
        return Err(Error::Inconsistent {
            check: "closed-form determinant of E(alpha)",
            discrepancy,
        });
    }
    let x3 = lu
        .solve(&Vector4::new(0.0, 0.0, 1.0, 0.0))
        .ok_or(Error::SingularMobility { alpha })?;
    let x4 = lu
        .solve(&Vector4::new(0.0, 0.0, 0.0, 1.0))
        .ok_or(Error::SingularMobility { alpha })?;
    Ok(MobilityDecomposition {
        alpha,
        e_mat,
        det_e,
        x3,
        x4,
        lu,
    })
}
