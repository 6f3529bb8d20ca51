use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter {
        field: &'static str,
        reason: &'static str,
    },

    /// Two independent routes to the same quantity disagree; this points at a
    /// transcription bug rather than bad input.
    #[error("consistency check `{check}` failed (discrepancy {discrepancy:e})")]
    Inconsistent {
        check: &'static str,
        discrepancy: f64,
    },

    #[error("mobility matrix is singular at alpha = {alpha}")]
    SingularMobility { alpha: f64 },

    #[error("integration diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("invalid control signal: {0}")]
    InvalidSignal(&'static str),

    #[error("interval [{t0}, {t1}] is not covered by the available samples")]
    OutOfRange { t0: f64, t1: f64 },

    #[error("return-loop budget exceeded: {what} = {value} (limit {limit})")]
    BudgetExceeded {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("return-loop synthesis failed: symmetry defect {defect:e} above {limit:e}")]
    SynthesisFailure { defect: f64, limit: f64 },

    #[error("rank {rank} is below the required {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("control bound exceeded: {component} sup-norm {value} >= {bound}")]
    BoundExceeded {
        component: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("state at distance {distance:e} lies outside the admissible radius {radius:e}")]
    OutsideNeighborhood { distance: f64, radius: f64 },
}
