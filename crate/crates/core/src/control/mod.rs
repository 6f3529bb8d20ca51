//! Constructive control: return loops, the end-point map and local steering.

mod return_loop;
mod steer;

pub use return_loop::{
    alpha_over_sin, bound_constant, return_feedback, synthesize_return, ReturnLoop, ReturnLoopConfig,
};
pub use steer::{
    endpoint_jacobian, endpoint_jacobian_at, endpoint_map, reference_loop, steer, PerturbationBasis, PhaseReport,
    SteeringConfig, SteeringProblem, SteeringReport,
};
