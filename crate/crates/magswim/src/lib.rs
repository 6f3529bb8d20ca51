//! File formats and command-line driver for `magswim-core`.
//!
//! Structured outputs are pretty-printed JSON, time series are CSV with the
//! header `t,x,y,theta,alpha,h_par,h_perp`. Every output records the seed.

pub mod cli;
pub mod commands;
pub mod io;

pub use cli::Cli;
pub use commands::{run, Code, Failure};
