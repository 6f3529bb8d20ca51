//! Controllability analysis: Jacobians, Lie brackets, rank tests at the
//! straight equilibrium and along constant-field trajectories.

mod bracket;
mod linear;

use alloc::vec::Vec;

use libm::cos;
use nalgebra::{DMatrix, Matrix4x2, SMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Field, FieldFrame, Mat4, State, Vec4};
use crate::params::SwimmerParams;
use crate::tol::{JACOBIAN_FD_ATOL, JACOBIAN_FD_STEP, SPAN_RTOL, SVD_RANK_RTOL};

pub use bracket::{lie_bracket, BracketExpr, FieldCombo};
pub use linear::{gramian_rank, linearize_along, GramianReport, LinearizationSample};

/// Singular values (descending) and the rank they imply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Absolute threshold below which singular values were discarded.
    pub threshold: f64,
}

impl RankReport {
    pub fn from_matrix(m: DMatrix<f64>, rtol: f64) -> Self {
        let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let threshold = rtol * sv.first().copied().unwrap_or(0.0);
        let rank = sv.iter().filter(|&&s| s > threshold).count();
        RankReport {
            rank,
            singular_values: sv,
            threshold,
        }
    }

    /// Smallest singular value: the quantitative margin of the rank verdict.
    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    /// `sigma_min / sigma_max`.
    pub fn inverse_condition(&self) -> f64 {
        match self.singular_values.first() {
            Some(&s) if s > 0.0 => self.sigma_min() / s,
            _ => 0.0,
        }
    }
}

fn columns_to_matrix(cols: &[Vec4]) -> DMatrix<f64> {
    DMatrix::from_fn(4, cols.len(), |r, c| cols[c][r])
}

/// Central finite-difference Jacobian of a basic field.
pub fn jacobian_fd(p: &SwimmerParams, field: Field, z: &State, h: f64) -> Result<Mat4> {
    let z0 = z.to_vector();
    let mut j = Mat4::zeros();
    for k in 0..4 {
        let mut zp = z0;
        let mut zm = z0;
        zp[k] += h;
        zm[k] -= h;
        let col = (FieldFrame::new(p, &zp)?.value(field) - FieldFrame::new(p, &zm)?.value(field)) / (2.0 * h);
        j.set_column(k, &col);
    }
    Ok(j)
}

/// Analytic Jacobian of `field` at `z`, cross-checked against central
/// differences.
pub fn jacobian_field(p: &SwimmerParams, field: Field, z: &State) -> Result<Mat4> {
    let j = FieldFrame::new(p, &z.to_vector())?.jacobian(field)?;
    let fd = jacobian_fd(p, field, z, JACOBIAN_FD_STEP)?;
    let discrepancy = (j - fd).amax();
    if discrepancy > JACOBIAN_FD_ATOL {
        return Err(Error::Inconsistent {
            check: "analytic vs. finite-difference Jacobian",
            discrepancy,
        });
    }
    Ok(j)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KalmanReport {
    pub rank: RankReport,
    /// `[B, AB, A^2 B, A^3 B]` at the equilibrium with zero field.
    pub matrix: SMatrix<f64, 4, 8>,
}

/// Kalman rank of the linearization at the straight equilibrium.
pub fn kalman_rank_at_origin(p: &SwimmerParams) -> Result<KalmanReport> {
    let frame = FieldFrame::new(p, &Vec4::zeros())?;
    let a = frame.jacobian(Field::F0)?;
    let b = Matrix4x2::from_columns(&[frame.value(Field::F1), frame.value(Field::F2)]);
    let mut matrix = SMatrix::<f64, 4, 8>::zeros();
    let mut block = b;
    for k in 0..4 {
        matrix.fixed_view_mut::<4, 2>(0, 2 * k).copy_from(&block);
        block = a * block;
    }
    let rank = RankReport::from_matrix(DMatrix::from_column_slice(4, 8, matrix.as_slice()), SVD_RANK_RTOL);
    Ok(KalmanReport { rank, matrix })
}

fn expr(indices: &[usize]) -> BracketExpr {
    BracketExpr::from_indices(indices).expect("static bracket indices")
}

/// Which fourth bracket completes `X3, X4, [X3,X4]` to a basis at `O`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LarcBasis {
    /// `[X3,[X3,X4]]`
    X334,
    /// `[X4,[X3,X4]]`
    X434,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LarcReport {
    pub rank: RankReport,
    pub det_334: f64,
    pub det_434: f64,
    /// Determinants divided by the product of their column norms.
    pub normalized_det_334: f64,
    pub normalized_det_434: f64,
    pub chosen: LarcBasis,
    pub assumption1_holds: bool,
    /// Rank below 4 although the standing assumption holds.
    pub suspicious: bool,
}

fn normalized_det(cols: &[Vec4; 4]) -> (f64, f64) {
    let m = Mat4::from_columns(cols);
    let det = m.determinant();
    let scale: f64 = cols.iter().map(|c| c.norm()).product();
    (det, if scale > 0.0 { det / scale } else { 0.0 })
}

/// The five vectors `X3, X4, X34, X334, X434` at `O`.
pub fn larc_vectors(p: &SwimmerParams) -> Result<[Vec4; 5]> {
    let o = State::origin();
    let mut out = [Vec4::zeros(); 5];
    for (v, idx) in out.iter_mut().zip([&[3usize][..], &[4], &[3, 4], &[3, 3, 4], &[4, 3, 4]]) {
        *v = expr(idx).eval(p, &o)?;
    }
    Ok(out)
}

pub fn larc_certificate(p: &SwimmerParams) -> Result<LarcReport> {
    let v = larc_vectors(p)?;
    let rank = RankReport::from_matrix(columns_to_matrix(&v), SVD_RANK_RTOL);
    let (det_334, n334) = normalized_det(&[v[0], v[1], v[2], v[3]]);
    let (det_434, n434) = normalized_det(&[v[0], v[1], v[2], v[4]]);
    let chosen = if n334.abs() >= n434.abs() {
        LarcBasis::X334
    } else {
        LarcBasis::X434
    };
    let assumption1_holds = p.satisfies_assumption1();
    Ok(LarcReport {
        suspicious: assumption1_holds && rank.rank < 4,
        rank,
        det_334,
        det_434,
        normalized_det_334: n334,
        normalized_det_434: n434,
        chosen,
        assumption1_holds,
    })
}

/// Columns `X3, X4, X34` and the chosen fourth bracket at `O`.
pub fn larc_basis(p: &SwimmerParams) -> Result<(Mat4, LarcBasis)> {
    let v = larc_vectors(p)?;
    let cert = larc_certificate(p)?;
    if cert.rank.rank < 4 {
        return Err(Error::RankDeficient {
            rank: cert.rank.rank,
            required: 4,
        });
    }
    let fourth = match cert.chosen {
        LarcBasis::X334 => v[3],
        LarcBasis::X434 => v[4],
    };
    Ok((Mat4::from_columns(&[v[0], v[1], v[2], fourth]), cert.chosen))
}

/// Coefficient of the orthogonal projection of `v` on `d`, and the relative
/// size of what is left.
fn project(v: &Vec4, d: &Vec4) -> (f64, f64) {
    let c = v.dot(d) / d.dot(d);
    let n = v.norm();
    (c, if n > 0.0 { (v - d * c).norm() / n } else { 0.0 })
}

/// Residual of `v` outside `span(cols)`, relative to `scale`.
fn span_residual(v: &Vec4, cols: &[Vec4], scale: f64) -> Result<(Vec<f64>, f64)> {
    let m = DMatrix::from_fn(4, cols.len(), |r, c| cols[c][r]);
    let rhs = DMatrix::from_column_slice(4, 1, v.as_slice());
    let sol = m
        .clone()
        .svd(true, true)
        .solve(&rhs, 0.0)
        .map_err(|_| Error::RankDeficient { rank: 0, required: cols.len() })?;
    let resid = (&m * &sol - rhs).norm();
    let coeffs = sol.iter().copied().collect();
    Ok((coeffs, if scale > 0.0 { resid / scale } else { 0.0 }))
}

/// Two independent recoveries of the scalar `L` in
/// `[F1,F2](O) = m1 L X3` and `[F0,F2](O) = -kappa L X4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LRecovery {
    pub from_f12: f64,
    pub from_f02: f64,
    pub relative_gap: f64,
    /// Part of `f12` orthogonal to `X3`, relative to `|f12|`.
    pub f12_residual: f64,
    /// Part of `f02` orthogonal to `X4`, relative to `|f02|`.
    pub f02_residual: f64,
}

impl LRecovery {
    pub fn value(&self) -> f64 {
        self.from_f12
    }
}

/// Fails with [`Error::Inconsistent`] when the two recoveries disagree beyond
/// [`SPAN_RTOL`].
pub fn recover_l(p: &SwimmerParams) -> Result<LRecovery> {
    let o = State::origin();
    let x3 = expr(&[3]).eval(p, &o)?;
    let x4 = expr(&[4]).eval(p, &o)?;
    let (c12, r12) = project(&expr(&[1, 2]).eval(p, &o)?, &x3);
    let (c02, r02) = project(&expr(&[0, 2]).eval(p, &o)?, &x4);
    let from_f12 = c12 / p.m1;
    let from_f02 = -c02 / p.kappa;
    let denom = from_f12.abs().max(from_f02.abs());
    let relative_gap = if denom > 0.0 { (from_f12 - from_f02).abs() / denom } else { 0.0 };
    let rec = LRecovery {
        from_f12,
        from_f02,
        relative_gap,
        f12_residual: r12,
        f02_residual: r02,
    };
    if relative_gap > SPAN_RTOL {
        return Err(Error::Inconsistent {
            check: "recoveries of L from f12 and f02",
            discrepancy: relative_gap,
        });
    }
    Ok(rec)
}

/// `[F2,[F1,F2]](O) - 2 m1 m2 L [X3,X4]`: returns its `X3` coefficient and
/// the residual outside `span{X3}` relative to `|f212|`.
pub fn f212_structure(p: &SwimmerParams) -> Result<(f64, f64)> {
    let o = State::origin();
    let l = recover_l(p)?.value();
    let f212 = expr(&[2, 1, 2]).eval(p, &o)?;
    let x34 = expr(&[3, 4]).eval(p, &o)?;
    let x3 = expr(&[3]).eval(p, &o)?;
    let v = f212 - x34 * (2.0 * p.m1 * p.m2 * l);
    let c = v.dot(&x3) / x3.dot(&x3);
    let scale = f212.norm();
    Ok((c, if scale > 0.0 { (v - x3 * c).norm() / scale } else { 0.0 }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadBracketReport {
    pub f101_norm: f64,
    pub f202: [f64; 4],
    pub in_span_x3_x4: bool,
    /// Part of `f202` outside `span{X3, X4}`, relative to the natural size
    /// `max(|f202|, kappa |L| (|m1| + |m2|) |X34|)`.
    pub span_residual: f64,
    /// Coordinates of `f202` in the basis `(X3, X4, X34, fourth)`.
    pub coefficients: [f64; 4],
    pub fourth: LarcBasis,
    pub x34_coefficient: f64,
    /// `2 kappa (m1 + m2) L`.
    pub predicted_x34_coefficient: f64,
}

pub fn bad_bracket_test(p: &SwimmerParams) -> Result<BadBracketReport> {
    let o = State::origin();
    let l = recover_l(p)?.value();
    let (basis, fourth) = larc_basis(p)?;
    let x3: Vec4 = basis.column(0).into();
    let x4: Vec4 = basis.column(1).into();
    let x34: Vec4 = basis.column(2).into();
    let f101 = expr(&[1, 0, 1]).eval(p, &o)?;
    let f202 = expr(&[2, 0, 2]).eval(p, &o)?;

    let natural = p.kappa * l.abs() * (p.m1.abs() + p.m2.abs()) * x34.norm();
    let scale = f202.norm().max(natural);
    if f101.norm() > 1e-10 * natural.max(1.0) {
        return Err(Error::Inconsistent {
            check: "f101 vanishes at the equilibrium",
            discrepancy: f101.norm(),
        });
    }
    let (_, span_residual) = span_residual(&f202, &[x3, x4], scale)?;
    let lu = basis.lu();
    let c = lu.solve(&f202).ok_or(Error::RankDeficient { rank: 3, required: 4 })?;
    let decomposition = (basis * c - f202).norm() / scale.max(f64::MIN_POSITIVE);
    if decomposition > SPAN_RTOL {
        return Err(Error::Inconsistent {
            check: "decomposition of f202 in the bracket basis",
            discrepancy: decomposition,
        });
    }
    Ok(BadBracketReport {
        f101_norm: f101.norm(),
        f202: [f202[0], f202[1], f202[2], f202[3]],
        in_span_x3_x4: span_residual < SPAN_RTOL,
        span_residual,
        coefficients: [c[0], c[1], c[2], c[3]],
        fourth,
        x34_coefficient: c[2],
        predicted_x34_coefficient: 2.0 * p.kappa * (p.m1 + p.m2) * l,
    })
}

/// Drift used to form the iterated brackets along a constant-field
/// trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriftChoice {
    /// `F0 + beta F2`: the field of the trajectory with `(h_par, h_perp) = (0, beta)`.
    #[default]
    PerpendicularField,
    /// `F0 + beta F1`.
    ParallelField,
}

impl DriftChoice {
    pub fn combo(&self, beta: f64) -> FieldCombo {
        let f = match self {
            DriftChoice::PerpendicularField => Field::F2,
            DriftChoice::ParallelField => Field::F1,
        };
        FieldCombo::single(Field::F0).plus(beta, f)
    }
}

fn bj_exprs(beta: f64, j: usize, drift: DriftChoice) -> [BracketExpr; 2] {
    let d = drift.combo(beta);
    let mut out = [BracketExpr::from(Field::F1), BracketExpr::from(Field::F2)];
    for _ in 0..j {
        out = out.map(|e| BracketExpr::bracket(d, e));
    }
    out
}

/// Columns `ad_D^j F1`, `ad_D^j F2` with `D` the chosen drift.
pub fn bj_fields(p: &SwimmerParams, beta: f64, z: &State, j: usize, drift: DriftChoice) -> Result<Matrix4x2<f64>> {
    let [a, b] = bj_exprs(beta, j, drift);
    Ok(Matrix4x2::from_columns(&[a.eval(p, z)?, b.eval(p, z)?]))
}

/// Rank of `[B_0, ..., B_jmax]` at `z`.
pub fn bj_stack_rank(p: &SwimmerParams, beta: f64, z: &State, jmax: usize, drift: DriftChoice) -> Result<RankReport> {
    let mut cols = Vec::with_capacity(2 * (jmax + 1));
    for j in 0..=jmax {
        let m = bj_fields(p, beta, z, j, drift)?;
        cols.push(m.column(0).into());
        cols.push(m.column(1).into());
    }
    Ok(RankReport::from_matrix(columns_to_matrix(&cols), SVD_RANK_RTOL))
}

/// `X5 = -beta (m2 + m1 cos alpha) [X3,[X3,X4]] + (-kappa alpha - beta m2) [X4,[X3,X4]]`
/// at `z`, followed by `det(X3, X4, [X3,X4], X5)` and that determinant over
/// the product of the column norms.
pub fn x5_beta_det(p: &SwimmerParams, beta: f64, z: &State) -> Result<(f64, f64)> {
    let a = z.alpha;
    let x3 = expr(&[3]).eval(p, z)?;
    let x4 = expr(&[4]).eval(p, z)?;
    let x34 = expr(&[3, 4]).eval(p, z)?;
    let x334 = expr(&[3, 3, 4]).eval(p, z)?;
    let x434 = expr(&[4, 3, 4]).eval(p, z)?;
    let c3 = -beta * (p.m2 + p.m1 * cos(a));
    let c4 = -p.kappa * a - beta * p.m2;
    let x5 = x334 * c3 + x434 * c4;
    Ok(normalized_det(&[x3, x4, x34, x5]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct X5Report {
    pub beta: f64,
    pub alphas: Vec<f64>,
    pub dets: Vec<f64>,
    pub normalized: Vec<f64>,
    /// The determinant is nonzero for every grid `alpha` with
    /// `0 < |alpha| < alpha_bar`.
    pub alpha_bar: f64,
    pub degenerate: bool,
}

impl X5Report {
    pub fn nonzero_off_origin(&self) -> bool {
        self.alphas
            .iter()
            .zip(&self.normalized)
            .all(|(&a, &n)| a == 0.0 || n.abs() > SVD_RANK_RTOL)
    }
}

pub fn x5_beta_rank(p: &SwimmerParams, beta: f64, alphas: &[f64]) -> Result<X5Report> {
    let mut dets = Vec::with_capacity(alphas.len());
    let mut normalized = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let (d, n) = x5_beta_det(p, beta, &State::new(0.0, 0.0, 0.0, a))?;
        dets.push(d);
        normalized.push(n);
    }
    let half_width = alphas.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    let mut alpha_bar = half_width;
    let mut order: Vec<usize> = (0..alphas.len()).filter(|&i| alphas[i] != 0.0).collect();
    order.sort_by(|&i, &j| alphas[i].total_cmp(&alphas[j]));
    for (k, &i) in order.iter().enumerate() {
        if normalized[i].abs() <= SVD_RANK_RTOL {
            alpha_bar = alpha_bar.min(alphas[i].abs());
        }
        if let Some(&j) = order.get(k + 1) {
            let same_side = alphas[i].signum() == alphas[j].signum();
            if same_side && normalized[i].signum() != normalized[j].signum() {
                let outer = if alphas[i].abs() > alphas[j].abs() { i } else { j };
                alpha_bar = alpha_bar.min(alphas[outer].abs());
            }
        }
    }
    let degenerate = normalized.iter().all(|n| n.abs() <= SVD_RANK_RTOL);
    Ok(X5Report {
        beta,
        alphas: alphas.to_vec(),
        dets,
        normalized,
        alpha_bar,
        degenerate,
    })
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order.
pub(crate) fn sorted_symmetric_eigen(m: Mat4) -> (Vec<f64>, Vec<Vec4>) {
    let eig = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..4).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = idx.iter().map(|&i| eig.eigenvectors.column(i).into()).collect();
    (vals, vecs)
}
