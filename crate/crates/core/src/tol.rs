//! Numerical tolerances and step sizes shared across the crate.

/// Relative agreement required between two algebraic routes to the same
/// quantity (closed-form vs. generic determinant, control-affine fields vs.
/// direct mobility solve).
pub const ALGEBRAIC_RTOL: f64 = 1e-10;

/// Relative agreement between the quadrature oracle and the assembled
/// mobility matrix.
pub const QUADRATURE_RTOL: f64 = 1e-8;

/// Number of Gauss–Legendre nodes used by the drag-law oracle on each segment.
pub const QUADRATURE_NODES: usize = 64;

/// Threshold used to decide that a parameter combination "is zero", relative
/// to the magnitude of its terms.
pub const DEGENERACY_RTOL: f64 = 1e-12;

/// Singular values below `SVD_RANK_RTOL * sigma_max` count as zero.
pub const SVD_RANK_RTOL: f64 = 1e-9;

/// Floor of the Gramian rank test, relative to its largest singular value.
/// The test also scales with the Richardson error estimate of the Gramian.
pub const GRAMIAN_RANK_RTOL: f64 = 1e-14;

/// Multiplier applied to the Gramian error estimate before it is used as a
/// rank threshold.
pub const GRAMIAN_NOISE_FACTOR: f64 = 10.0;

/// Relative residual below which a vector counts as lying in a span.
pub const SPAN_RTOL: f64 = 1e-8;

/// Central finite-difference step used to differentiate composite brackets.
pub const BRACKET_FD_STEP: f64 = 1e-5;

/// Central finite-difference step for checking analytic Jacobians.
pub const JACOBIAN_FD_STEP: f64 = 1e-6;

/// Admissible mismatch between analytic and finite-difference Jacobians.
pub const JACOBIAN_FD_ATOL: f64 = 1e-5;

/// Below this magnitude `alpha / sin(alpha)` is evaluated by its series.
pub const ALPHA_SERIES_CUTOFF: f64 = 1e-3;

/// Default maximal integrator step.
pub const DEFAULT_DT_MAX: f64 = 1e-3;

/// Default advisory local-error budget reported by the integrator.
pub const DEFAULT_STEP_TOL: f64 = 1e-10;
