//! Iterated Lie brackets of the swimmer's vector fields.
//!
//! Every field here has the form `V(z) = R(theta) v(alpha)` (rotation acting
//! on the position block only), and brackets preserve that form:
//!
//! ```text
//! [V, W] = R(theta) (v_th J w + v_al w' - w_th J v - w_al v')
//! ```
//!
//! with `J(a, b, c, d) = (-b, a, 0, 0)`. Brackets are therefore evaluated on
//! truncated Taylor series in `alpha`, which is exact up to rounding at any
//! nesting depth. The finite-difference route ([`BracketExpr::eval_fd`])
//! differentiates composite brackets numerically and serves as a cross-check.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::{cos, sin};

use crate::error::{Error, Result};
use crate::model::{e_matrix, e_matrix_trig_parts, rotate, Field, FieldFrame, Mat4, State, Vec4};
use crate::params::SwimmerParams;
use crate::tol::BRACKET_FD_STEP;

/// Constant-coefficient combination of the five basic fields, in the order
/// `F0, F1, F2, X3, X4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldCombo {
    pub weights: [f64; 5],
}

impl FieldCombo {
    pub fn single(f: Field) -> Self {
        let mut weights = [0.0; 5];
        weights[field_index(f)] = 1.0;
        FieldCombo { weights }
    }

    pub fn plus(mut self, w: f64, f: Field) -> Self {
        self.weights[field_index(f)] += w;
        self
    }

    fn as_single(&self) -> Option<Field> {
        let mut found = None;
        for (i, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            if w != 1.0 || found.is_some() {
                return None;
            }
            found = Some(Field::ALL[i]);
        }
        found
    }

    fn terms(&self) -> impl Iterator<Item = (f64, Field)> + '_ {
        self.weights
            .iter()
            .zip(Field::ALL.iter())
            .filter(|(w, _)| **w != 0.0)
            .map(|(w, f)| (*w, *f))
    }
}

fn field_index(f: Field) -> usize {
    match f {
        Field::F0 => 0,
        Field::F1 => 1,
        Field::F2 => 2,
        Field::X3 => 3,
        Field::X4 => 4,
    }
}

fn field_name(f: Field) -> &'static str {
    match f {
        Field::F0 => "F0",
        Field::F1 => "F1",
        Field::F2 => "F2",
        Field::X3 => "X3",
        Field::X4 => "X4",
    }
}

/// A bracket polynomial: leaves are field combinations, nodes are brackets.
#[derive(Clone, Debug, PartialEq)]
pub enum BracketExpr {
    Leaf(FieldCombo),
    Bracket(Box<BracketExpr>, Box<BracketExpr>),
}

impl From<Field> for BracketExpr {
    fn from(f: Field) -> Self {
        BracketExpr::Leaf(FieldCombo::single(f))
    }
}

impl From<FieldCombo> for BracketExpr {
    fn from(c: FieldCombo) -> Self {
        BracketExpr::Leaf(c)
    }
}

impl BracketExpr {
    pub fn bracket(a: impl Into<BracketExpr>, b: impl Into<BracketExpr>) -> Self {
        BracketExpr::Bracket(Box::new(a.into()), Box::new(b.into()))
    }

    /// Right-nested bracket `[f_{i1}, [f_{i2}, ... f_{ik}]]`, with index
    /// `0, 1, 2` for `F0, F1, F2` and `3, 4` for `X3, X4`.
    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let leaf = |i: usize| -> Result<BracketExpr> {
            Field::ALL
                .get(i)
                .map(|&f| f.into())
                .ok_or(Error::InvalidSignal("bracket index must be 0..=4"))
        };
        let (&last, rest) = indices
            .split_last()
            .ok_or(Error::InvalidSignal("empty bracket index list"))?;
        let mut e = leaf(last)?;
        for &i in rest.iter().rev() {
            e = BracketExpr::bracket(leaf(i)?, e);
        }
        Ok(e)
    }

    pub fn depth(&self) -> usize {
        match self {
            BracketExpr::Leaf(_) => 0,
            BracketExpr::Bracket(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Number of occurrences of `F0`, `F1`, `F2` among the leaves; `None` if
    /// a leaf is a genuine combination.
    pub fn degrees(&self) -> Option<[usize; 3]> {
        match self {
            BracketExpr::Leaf(c) => {
                let mut d = [0; 3];
                match c.as_single()? {
                    Field::F0 => d[0] = 1,
                    Field::F1 => d[1] = 1,
                    Field::F2 => d[2] = 1,
                    Field::X3 | Field::X4 => {}
                }
                Some(d)
            }
            BracketExpr::Bracket(a, b) => {
                let (da, db) = (a.degrees()?, b.degrees()?);
                Some([da[0] + db[0], da[1] + db[1], da[2] + db[2]])
            }
        }
    }

    /// Weighted degree `theta * delta0 + delta1 + delta2`.
    pub fn rho(&self, theta: f64) -> Option<f64> {
        let d = self.degrees()?;
        Some(theta * d[0] as f64 + (d[1] + d[2]) as f64)
    }

    /// Odd drift count and even counts of both controls.
    pub fn is_bad(&self) -> bool {
        matches!(self.degrees(), Some([d0, d1, d2]) if d0 % 2 == 1 && d1 % 2 == 0 && d2 % 2 == 0)
    }

    /// The same expression with `F1` and `F2` exchanged.
    pub fn swap_controls(&self) -> Self {
        match self {
            BracketExpr::Leaf(c) => {
                let mut w = c.weights;
                w.swap(1, 2);
                BracketExpr::Leaf(FieldCombo { weights: w })
            }
            BracketExpr::Bracket(a, b) => BracketExpr::Bracket(Box::new(a.swap_controls()), Box::new(b.swap_controls())),
        }
    }

    /// Symmetrization over permutations of the two controls.
    pub fn symmetrized(&self, p: &SwimmerParams, z: &State) -> Result<Vec4> {
        Ok(self.eval(p, z)? + self.swap_controls().eval(p, z)?)
    }

    /// Exact evaluation through Taylor series in `alpha`.
    pub fn eval(&self, p: &SwimmerParams, z: &State) -> Result<Vec4> {
        self.eval_vec(p, &z.to_vector())
    }

    pub fn eval_vec(&self, p: &SwimmerParams, z: &Vec4) -> Result<Vec4> {
        let ctx = JetContext::new(p, z[3], self.depth())?;
        let jet = ctx.jet(self);
        Ok(rotate(z[2], &jet[0]))
    }

    /// Second route: analytic Jacobians at the leaves, central differences
    /// (step [`BRACKET_FD_STEP`]) for composite sub-brackets.
    pub fn eval_fd(&self, p: &SwimmerParams, z: &State) -> Result<Vec4> {
        self.value_fd(p, &z.to_vector())
    }

    fn value_fd(&self, p: &SwimmerParams, z: &Vec4) -> Result<Vec4> {
        match self {
            BracketExpr::Leaf(c) => {
                let frame = FieldFrame::new(p, z)?;
                Ok(c.terms().fold(Vec4::zeros(), |acc, (w, f)| acc + frame.value(f) * w))
            }
            BracketExpr::Bracket(a, b) => {
                let va = a.value_fd(p, z)?;
                let vb = b.value_fd(p, z)?;
                Ok(b.jacobian_fd(p, z)? * va - a.jacobian_fd(p, z)? * vb)
            }
        }
    }

    fn jacobian_fd(&self, p: &SwimmerParams, z: &Vec4) -> Result<Mat4> {
        match self {
            BracketExpr::Leaf(c) => {
                let frame = FieldFrame::new(p, z)?;
                let mut j = Mat4::zeros();
                for (w, f) in c.terms() {
                    j += frame.jacobian(f)? * w;
                }
                Ok(j)
            }
            BracketExpr::Bracket(..) => {
                let h = BRACKET_FD_STEP;
                let mut j = Mat4::zeros();
                for k in 0..4 {
                    let mut zp = *z;
                    let mut zm = *z;
                    zp[k] += h;
                    zm[k] -= h;
                    let col = (self.value_fd(p, &zp)? - self.value_fd(p, &zm)?) / (2.0 * h);
                    j.set_column(k, &col);
                }
                Ok(j)
            }
        }
    }
}

impl fmt::Display for BracketExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketExpr::Leaf(c) => match c.as_single() {
                Some(field) => f.write_str(field_name(field)),
                None => {
                    let parts: Vec<String> = c.terms().map(|(w, fl)| format!("{w}*{}", field_name(fl))).collect();
                    write!(f, "({})", parts.join(" + "))
                }
            },
            BracketExpr::Bracket(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

/// Lab-frame bracket `[f, g] = Dg f - Df g` at `z`.
pub fn lie_bracket(p: &SwimmerParams, f: impl Into<BracketExpr>, g: impl Into<BracketExpr>, z: &State) -> Result<Vec4> {
    BracketExpr::bracket(f, g).eval(p, z)
}

type Jet = Vec<Vec4>;

/// Taylor coefficients (in `s = alpha - alpha0`) of the body-frame `X3`,
/// `X4` and of `sin`, `cos`, up to a fixed order.
struct JetContext {
    params: SwimmerParams,
    alpha0: f64,
    x3: Jet,
    x4: Jet,
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl JetContext {
    fn new(p: &SwimmerParams, alpha0: f64, order: usize) -> Result<Self> {
        let n = order + 1;
        let (s0, c0) = (sin(alpha0), cos(alpha0));
        let mut sin_j = vec![0.0; n];
        let mut cos_j = vec![0.0; n];
        let mut fact = 1.0;
        for k in 0..n {
            if k > 0 {
                fact *= k as f64;
            }
            let (ds, dc) = match k % 4 {
                0 => (s0, c0),
                1 => (c0, -s0),
                2 => (-s0, -c0),
                _ => (-c0, s0),
            };
            sin_j[k] = ds / fact;
            cos_j[k] = dc / fact;
        }

        let dec = e_matrix(p, alpha0)?;
        let (_, ec, es) = e_matrix_trig_parts(p);
        let e_k: Vec<Mat4> = (0..n).map(|k| ec * cos_j[k] + es * sin_j[k]).collect();
        let invert = |first: Vec4| -> Result<Jet> {
            // E0 Y_k = -sum_{i>=1} E_i Y_{k-i}
            let mut y = vec![first];
            for k in 1..n {
                let mut acc = Vec4::zeros();
                for i in 1..=k {
                    acc += e_k[i] * y[k - i];
                }
                y.push(-dec.solve(&acc)?);
            }
            Ok(y)
        };
        Ok(JetContext {
            params: *p,
            alpha0,
            x3: invert(dec.x3)?,
            x4: invert(dec.x4)?,
            sin: sin_j,
            cos: cos_j,
        })
    }

    fn order(&self) -> usize {
        self.x3.len() - 1
    }

    fn coefficient_jets(&self, f: Field) -> (Vec<f64>, Vec<f64>) {
        let n = self.order() + 1;
        let p = &self.params;
        let mut c3 = vec![0.0; n];
        let mut c4 = vec![0.0; n];
        match f {
            Field::F0 => {
                c4[0] = -p.kappa * self.alpha0;
                if n > 1 {
                    c4[1] = -p.kappa;
                }
            }
            Field::F1 => {
                for k in 0..n {
                    c3[k] = p.m1 * self.sin[k];
                }
            }
            Field::F2 => {
                for k in 0..n {
                    c3[k] = -p.m1 * self.cos[k];
                }
                c3[0] -= p.m2;
                c4[0] = -p.m2;
            }
            Field::X3 => c3[0] = 1.0,
            Field::X4 => c4[0] = 1.0,
        }
        (c3, c4)
    }

    fn leaf(&self, c: &FieldCombo) -> Jet {
        let n = self.order() + 1;
        let mut out = vec![Vec4::zeros(); n];
        for (w, f) in c.terms() {
            let (c3, c4) = self.coefficient_jets(f);
            for k in 0..n {
                for i in 0..=k {
                    out[k] += (self.x3[k - i] * c3[i] + self.x4[k - i] * c4[i]) * w;
                }
            }
        }
        out
    }

    fn jet(&self, e: &BracketExpr) -> Jet {
        match e {
            BracketExpr::Leaf(c) => self.leaf(c),
            BracketExpr::Bracket(a, b) => bracket_jet(&self.jet(a), &self.jet(b)),
        }
    }
}

fn rot90(v: &Vec4) -> Vec4 {
    Vec4::new(-v[1], v[0], 0.0, 0.0)
}

/// Series of the body-frame bracket; one order shorter than its inputs.
fn bracket_jet(v: &Jet, w: &Jet) -> Jet {
    let n = v.len().min(w.len()) - 1;
    let mut u = vec![Vec4::zeros(); n];
    for (k, uk) in u.iter_mut().enumerate() {
        for i in 0..=k {
            let j = k - i;
            let dj = (j + 1) as f64;
            *uk += rot90(&w[j]) * v[i][2] + w[j + 1] * (dj * v[i][3]) - rot90(&v[j]) * w[i][2] - v[j + 1] * (dj * w[i][3]);
        }
    }
    u
}
