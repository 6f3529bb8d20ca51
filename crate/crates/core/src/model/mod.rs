//! Hydrodynamic, elastic and magnetic model of the two-link swimmer.
//!
//! The configuration is `z = (x, y, theta, alpha)`: midpoint and heading of
//! the second link, and the joint angle. Under the low-Reynolds-number force
//! and torque balance the dynamics are control-affine,
//!
//! ```text
//! dz/dt = F0(z) + h_par F1(z) + h_perp F2(z)
//! ```
//!
//! with `F0 = -kappa alpha X4`, `F1 = m1 sin(alpha) X3` and
//! `F2 = -(m1 cos(alpha) + m2) X3 - m2 X4`, where `X3`, `X4` are the last two
//! columns of `E(alpha)^-1` pushed to the lab frame.

mod mobility;
mod rft;

use core::f64::consts::PI;

use libm::{ceil, cos, sin};
use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SwimmerParams;
use crate::tol::ALGEBRAIC_RTOL;

pub use mobility::{
    det_closed_form, e_matrix, e_matrix_derivative, e_matrix_raw, e_matrix_trig_parts,
    MobilityDecomposition,
};
pub use rft::{gauss_legendre, rft_quadrature_oracle, HydroLoads};

pub type Vec4 = Vector4<f64>;
pub type Mat4 = Matrix4<f64>;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = a - 2.0 * PI * ceil((a - PI) / (2.0 * PI));
    // guard against rounding landing exactly on -pi
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Configuration of the swimmer. Angles are kept in `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub alpha: f64,
}

impl State {
    pub fn new(x: f64, y: f64, theta: f64, alpha: f64) -> Self {
        State {
            x,
            y,
            theta: wrap_angle(theta),
            alpha: wrap_angle(alpha),
        }
    }

    /// The straight equilibrium at the origin.
    pub const fn origin() -> Self {
        State {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
            alpha: 0.0,
        }
    }

    pub fn from_vector(v: &Vec4) -> Self {
        State::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_vector(&self) -> Vec4 {
        Vec4::new(self.x, self.y, self.theta, self.alpha)
    }

    /// `self - other` with angle differences wrapped.
    pub fn delta(&self, other: &State) -> Vec4 {
        Vec4::new(
            self.x - other.x,
            self.y - other.y,
            wrap_angle(self.theta - other.theta),
            wrap_angle(self.alpha - other.alpha),
        )
    }

    pub fn distance(&self, other: &State) -> f64 {
        self.delta(other).norm()
    }

    /// Euclidean norm of `(x, y, theta, alpha)`.
    pub fn norm_from_origin(&self) -> f64 {
        self.to_vector().norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite() && self.alpha.is_finite()
    }
}

impl Default for State {
    fn default() -> Self {
        State::origin()
    }
}

/// Magnetic field in the frame of the second link.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub h_par: f64,
    pub h_perp: f64,
}

impl Control {
    pub const ZERO: Control = Control {
        h_par: 0.0,
        h_perp: 0.0,
    };

    pub const fn new(h_par: f64, h_perp: f64) -> Self {
        Control { h_par, h_perp }
    }

    pub fn is_finite(&self) -> bool {
        self.h_par.is_finite() && self.h_perp.is_finite()
    }

    pub fn lerp(&self, other: &Control, w: f64) -> Control {
        Control {
            h_par: self.h_par + (other.h_par - self.h_par) * w,
            h_perp: self.h_perp + (other.h_perp - self.h_perp) * w,
        }
    }
}

impl core::ops::Add for Control {
    type Output = Control;
    fn add(self, rhs: Control) -> Control {
        Control::new(self.h_par + rhs.h_par, self.h_perp + rhs.h_perp)
    }
}

impl core::ops::Sub for Control {
    type Output = Control;
    fn sub(self, rhs: Control) -> Control {
        Control::new(self.h_par - rhs.h_par, self.h_perp - rhs.h_perp)
    }
}

/// The vector fields of the control-affine system, plus the two mobility
/// columns they are built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    F0,
    F1,
    F2,
    X3,
    X4,
}

impl Field {
    pub const ALL: [Field; 5] = [Field::F0, Field::F1, Field::F2, Field::X3, Field::X4];
}

/// Everything needed to evaluate the fields and their Jacobians at one
/// configuration.
#[derive(Clone, Debug)]
pub struct FieldFrame {
    params: SwimmerParams,
    theta: f64,
    alpha: f64,
    mobility: MobilityDecomposition,
}

pub(crate) fn rotate(theta: f64, v: &Vec4) -> Vec4 {
    let (s, c) = (sin(theta), cos(theta));
    Vec4::new(c * v[0] - s * v[1], s * v[0] + c * v[1], v[2], v[3])
}

fn rotate_dtheta(theta: f64, v: &Vec4) -> Vec4 {
    let (s, c) = (sin(theta), cos(theta));
    Vec4::new(-s * v[0] - c * v[1], c * v[0] - s * v[1], 0.0, 0.0)
}

impl FieldFrame {
    /// `z` is taken as a raw coordinate vector; angles need not be wrapped.
    pub fn new(p: &SwimmerParams, z: &Vec4) -> Result<Self> {
        Ok(FieldFrame {
            params: *p,
            theta: z[2],
            alpha: z[3],
            mobility: e_matrix(p, z[3])?,
        })
    }

    pub fn mobility(&self) -> &MobilityDecomposition {
        &self.mobility
    }

    pub fn x3(&self) -> Vec4 {
        rotate(self.theta, &self.mobility.x3)
    }

    pub fn x4(&self) -> Vec4 {
        rotate(self.theta, &self.mobility.x4)
    }

    /// Coefficients `(c3, c4)` with `field = c3 X3 + c4 X4`.
    pub fn coefficients(&self, field: Field) -> (f64, f64) {
        let p = &self.params;
        let (s, c) = (sin(self.alpha), cos(self.alpha));
        match field {
            Field::F0 => (0.0, -p.kappa * self.alpha),
            Field::F1 => (p.m1 * s, 0.0),
            Field::F2 => (-(p.m1 * c + p.m2), -p.m2),
            Field::X3 => (1.0, 0.0),
            Field::X4 => (0.0, 1.0),
        }
    }

    fn coefficient_derivatives(&self, field: Field) -> (f64, f64) {
        let p = &self.params;
        let (s, c) = (sin(self.alpha), cos(self.alpha));
        match field {
            Field::F0 => (0.0, -p.kappa),
            Field::F1 => (p.m1 * c, 0.0),
            Field::F2 => (p.m1 * s, 0.0),
            Field::X3 | Field::X4 => (0.0, 0.0),
        }
    }

    pub fn value(&self, field: Field) -> Vec4 {
        let (c3, c4) = self.coefficients(field);
        self.x3() * c3 + self.x4() * c4
    }

    /// `F0 + u.h_par F1 + u.h_perp F2`.
    pub fn rhs(&self, u: &Control) -> Vec4 {
        let (a3, a4) = self.coefficients(Field::F0);
        let (b3, _) = self.coefficients(Field::F1);
        let (c3, c4) = self.coefficients(Field::F2);
        self.x3() * (a3 + u.h_par * b3 + u.h_perp * c3) + self.x4() * (a4 + u.h_perp * c4)
    }

    /// Analytic Jacobians of the lab-frame `X3` and `X4`.
    fn mobility_jacobians(&self) -> Result<(Mat4, Mat4)> {
        let de = e_matrix_derivative(&self.params, self.alpha);
        let d3 = -self.mobility.solve(&(de * self.mobility.x3))?;
        let d4 = -self.mobility.solve(&(de * self.mobility.x4))?;
        let mut j3 = Mat4::zeros();
        let mut j4 = Mat4::zeros();
        j3.set_column(2, &rotate_dtheta(self.theta, &self.mobility.x3));
        j3.set_column(3, &rotate(self.theta, &d3));
        j4.set_column(2, &rotate_dtheta(self.theta, &self.mobility.x4));
        j4.set_column(3, &rotate(self.theta, &d4));
        Ok((j3, j4))
    }

    /// Analytic Jacobian of `field` with respect to `(x, y, theta, alpha)`.
    pub fn jacobian(&self, field: Field) -> Result<Mat4> {
        let (j3, j4) = self.mobility_jacobians()?;
        let (c3, c4) = self.coefficients(field);
        let (d3, d4) = self.coefficient_derivatives(field);
        let mut j = j3 * c3 + j4 * c4;
        let extra = self.x3() * d3 + self.x4() * d4;
        let mut col = j.column_mut(3);
        col += extra;
        Ok(j)
    }

    /// Jacobian of `F0 + u.h_par F1 + u.h_perp F2` for a frozen control.
    pub fn rhs_jacobian(&self, u: &Control) -> Result<Mat4> {
        Ok(self.jacobian(Field::F0)?
            + self.jacobian(Field::F1)? * u.h_par
            + self.jacobian(Field::F2)? * u.h_perp)
    }
}

/// `F0`, `F1`, `F2` (and `X3`, `X4`) at `z`, lab frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldValues {
    pub f0: Vec4,
    pub f1: Vec4,
    pub f2: Vec4,
    pub x3: Vec4,
    pub x4: Vec4,
}

pub fn vector_fields(p: &SwimmerParams, z: &State) -> Result<FieldValues> {
    let frame = FieldFrame::new(p, &z.to_vector())?;
    Ok(FieldValues {
        f0: frame.value(Field::F0),
        f1: frame.value(Field::F1),
        f2: frame.value(Field::F2),
        x3: frame.x3(),
        x4: frame.x4(),
    })
}

/// Right-hand side of the control-affine dynamics, raw coordinates.
pub fn rhs_vec(p: &SwimmerParams, z: &Vec4, u: &Control) -> Result<Vec4> {
    Ok(FieldFrame::new(p, z)?.rhs(u))
}

pub fn rhs(p: &SwimmerParams, z: &State, u: &Control) -> Result<Vec4> {
    rhs_vec(p, &z.to_vector(), u)
}

/// Full mobility matrix `M^h(theta, alpha) = diag(R_{theta+alpha}, I) E(alpha) diag(R_{-theta}, I)`.
pub fn mobility_matrix(p: &SwimmerParams, z: &State) -> Mat4 {
    let rot = |phi: f64| {
        let (s, c) = (sin(phi), cos(phi));
        let mut m = Mat4::identity();
        m[(0, 0)] = c;
        m[(0, 1)] = -s;
        m[(1, 0)] = s;
        m[(1, 1)] = c;
        m
    };
    rot(z.theta + z.alpha) * e_matrix_raw(p, z.alpha) * rot(-z.theta)
}

/// Right-hand side of the force/torque balance (magnetic and elastic terms).
pub fn balance_rhs(p: &SwimmerParams, z: &State, u: &Control) -> Vec4 {
    let (s, c) = (sin(z.alpha), cos(z.alpha));
    Vec4::new(
        0.0,
        0.0,
        -p.m1 * (c * u.h_perp - s * u.h_par) - p.m2 * u.h_perp,
        -p.kappa * z.alpha - p.m2 * u.h_perp,
    )
}

/// Second route to the dynamics: solve `M^h dz = balance` directly.
pub fn rhs_via_mobility(p: &SwimmerParams, z: &State, u: &Control) -> Result<Vec4> {
    mobility_matrix(p, z)
        .lu()
        .solve(&balance_rhs(p, z, u))
        .ok_or(Error::SingularMobility { alpha: z.alpha })
}

/// Evaluates both routes and fails if they disagree beyond [`ALGEBRAIC_RTOL`].
pub fn rhs_checked(p: &SwimmerParams, z: &State, u: &Control) -> Result<Vec4> {
    let a = rhs(p, z, u)?;
    let b = rhs_via_mobility(p, z, u)?;
    let scale = a.norm().max(b.norm());
    let discrepancy = if scale == 0.0 { 0.0 } else { (a - b).norm() / scale };
    if discrepancy > ALGEBRAIC_RTOL {
        return Err(Error::Inconsistent {
            check: "control-affine fields vs. mobility solve",
            discrepancy,
        });
    }
    Ok(a)
}

/// Generalized hydrodynamic loads `E(alpha) (R_{-theta} xdot, thetadot, alphadot)`
/// produced by the velocity `dz`; comparable to [`HydroLoads::generalized`].
pub fn mobility_loads(p: &SwimmerParams, z: &State, dz: &Vec4) -> Vec4 {
    let (s, c) = (sin(z.theta), cos(z.theta));
    let body = Vec4::new(c * dz[0] + s * dz[1], -s * dz[0] + c * dz[1], dz[2], dz[3]);
    e_matrix_raw(p, z.alpha) * body
}

/// The two conserved quantities of an isotropic-drag swimmer
/// (`eta_i = xi_i`): the drag-weighted centre of the links. `None` when the
/// drag is anisotropic.
pub fn first_integrals(p: &SwimmerParams, z: &State) -> Option<(f64, f64)> {
    let report = p.validate().ok()?;
    if !report.isotropic_drag {
        return None;
    }
    let w = p.eta1 * p.l1 / (2.0 * (p.eta1 * p.l1 + p.eta2 * p.l2));
    let phi = z.theta + z.alpha;
    let cx = z.x - w * (p.l1 * cos(phi) + p.l2 * cos(z.theta));
    let cy = z.y - w * (p.l1 * sin(phi) + p.l2 * sin(z.theta));
    Some((cx, cy))
}
