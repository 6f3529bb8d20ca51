//! Physical constants of the swimmer and the checks that decide which
//! controllability regime a parameter set falls in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol::DEGENERACY_RTOL;

/// The nine constants characterising a two-link magneto-elastic swimmer.
///
/// `xi*` are tangential drag coefficients, `eta*` normal ones, `m*` the
/// (signed) magnetic moments of the two links and `kappa` the stiffness of
/// the torsional spring at the joint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwimmerParams {
    pub l1: f64,
    pub l2: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub m1: f64,
    pub m2: f64,
    pub kappa: f64,
}

/// Per-condition verdicts for a parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Lengths, drags and stiffness positive; moments nonzero.
    pub positivity: bool,
    /// `(eta1 - xi1, eta2 - xi2) != (0, 0)`.
    pub drag_anisotropy: bool,
    /// `eta1 >= xi1` and `eta2 >= xi2`.
    pub normal_drag_dominates: bool,
    /// Value of the magnetization combination
    /// `(3 + 4 l2/l1 + eta2 l2^2/(eta1 l1^2)) m1 - (3 + 4 l1/l2 + eta1 l1^2/(eta2 l2^2)) m2`.
    pub magnetization_combination: f64,
    /// The combination above is nonzero.
    pub magnetization_nondegenerate: bool,
    /// The combination vanishes: the straight set `{alpha = 0}` is invariant.
    pub straight_set_invariant: bool,
    /// `eta1 = xi1` and `eta2 = xi2`: position is slaved to the angles.
    pub isotropic_drag: bool,
    pub assumption1_holds: bool,
}

impl SwimmerParams {
    /// Reference parameter set used throughout the tests and examples:
    /// unit lengths, `xi = 1`, `eta = 2`, `m = (1, 2)`, unit stiffness.
    pub const REFERENCE: SwimmerParams = SwimmerParams {
        l1: 1.0,
        l2: 1.0,
        xi1: 1.0,
        xi2: 1.0,
        eta1: 2.0,
        eta2: 2.0,
        m1: 1.0,
        m2: 2.0,
        kappa: 1.0,
    };

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        l1: f64,
        l2: f64,
        xi1: f64,
        xi2: f64,
        eta1: f64,
        eta2: f64,
        m1: f64,
        m2: f64,
        kappa: f64,
    ) -> Result<Self> {
        let p = SwimmerParams {
            l1,
            l2,
            xi1,
            xi2,
            eta1,
            eta2,
            m1,
            m2,
            kappa,
        };
        p.check()?;
        Ok(p)
    }

    fn named(&self) -> [(&'static str, f64, bool); 9] {
        // (name, value, must be strictly positive)
        [
            ("l1", self.l1, true),
            ("l2", self.l2, true),
            ("xi1", self.xi1, true),
            ("xi2", self.xi2, true),
            ("eta1", self.eta1, true),
            ("eta2", self.eta2, true),
            ("m1", self.m1, false),
            ("m2", self.m2, false),
            ("kappa", self.kappa, true),
        ]
    }

    /// Rejects non-finite fields, non-positive lengths/drags/stiffness and
    /// vanishing magnetic moments.
    pub fn check(&self) -> Result<()> {
        for (field, value, positive) in self.named() {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    field,
                    reason: "not finite",
                });
            }
            if positive && value <= 0.0 {
                return Err(Error::InvalidParameter {
                    field,
                    reason: "must be strictly positive",
                });
            }
            if !positive && value == 0.0 {
                return Err(Error::InvalidParameter {
                    field,
                    reason: "must be nonzero",
                });
            }
        }
        Ok(())
    }

    /// Left-hand side shared by the invariance condition on `{alpha = 0}` and
    /// its negation in the standing assumption, together with the magnitude
    /// of its two terms (used to decide "zero" in floating point).
    fn magnetization_terms(&self) -> (f64, f64) {
        let r1 = self.eta1 * self.l1 * self.l1;
        let r2 = self.eta2 * self.l2 * self.l2;
        let a = (3.0 + 4.0 * self.l2 / self.l1 + r2 / r1) * self.m1;
        let b = (3.0 + 4.0 * self.l1 / self.l2 + r1 / r2) * self.m2;
        (a - b, a.abs() + b.abs())
    }

    pub fn magnetization_combination(&self) -> f64 {
        self.magnetization_terms().0
    }

    /// Rate of change of the joint angle per unit perpendicular field at a
    /// straight configuration: `3 C / (l1 l2 (eta1 l1 + eta2 l2))` where `C`
    /// is [`Self::magnetization_combination`].
    pub fn straight_alpha_rate(&self) -> f64 {
        3.0 * self.magnetization_combination()
            / (self.l1 * self.l2 * (self.eta1 * self.l1 + self.eta2 * self.l2))
    }

    /// Bound on the parallel field that the return construction cannot go
    /// below: `2 kappa |m1 + m2| / |m1 m2|`.
    pub fn parallel_field_floor(&self) -> f64 {
        2.0 * self.kappa * (self.m1 + self.m2).abs() / (self.m1 * self.m2).abs()
    }

    pub fn validate(&self) -> Result<ValidationReport> {
        self.check()?;
        let zeroish = |a: f64, b: f64| (a - b).abs() <= DEGENERACY_RTOL * (a.abs() + b.abs());
        let gap1_zero = zeroish(self.eta1, self.xi1);
        let gap2_zero = zeroish(self.eta2, self.xi2);
        let drag_anisotropy = !(gap1_zero && gap2_zero);
        let normal_drag_dominates =
            (self.eta1 >= self.xi1 || gap1_zero) && (self.eta2 >= self.xi2 || gap2_zero);
        let (value, scale) = self.magnetization_terms();
        let straight_set_invariant = value.abs() <= DEGENERACY_RTOL * scale;
        let magnetization_nondegenerate = !straight_set_invariant;
        Ok(ValidationReport {
            positivity: true,
            drag_anisotropy,
            normal_drag_dominates,
            magnetization_combination: value,
            magnetization_nondegenerate,
            straight_set_invariant,
            isotropic_drag: gap1_zero && gap2_zero,
            assumption1_holds: drag_anisotropy && normal_drag_dominates && magnetization_nondegenerate,
        })
    }

    /// Convenience wrapper: `true` iff the parameters are valid and satisfy
    /// the standing assumption.
    pub fn satisfies_assumption1(&self) -> bool {
        self.validate().map(|r| r.assumption1_holds).unwrap_or(false)
    }

    /// Same swimmer with every length multiplied by `factor`.
    pub fn scaled_lengths(&self, factor: f64) -> Self {
        SwimmerParams {
            l1: self.l1 * factor,
            l2: self.l2 * factor,
            ..*self
        }
    }
}

impl Default for SwimmerParams {
    fn default() -> Self {
        Self::REFERENCE
    }
}
