//! Planar two-link magneto-elastic swimmer: resistive-force model,
//! trajectory integration, Lie-bracket controllability analysis and
//! return-method steering.
//!
//! The crate is `no_std` (it needs `alloc`); file formats and the command
//! line live in the `magswim` crate.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod control;
pub mod error;
pub mod model;
pub mod params;
pub mod signal;
pub mod sim;
pub mod tol;

pub use error::{Error, Result};
pub use model::{Control, Field, State};
pub use params::{SwimmerParams, ValidationReport};
pub use signal::{ControlSignal, SignalKind};
pub use sim::{endpoint, integrate, FrameTransform, IntegrateOptions, Trajectory};
