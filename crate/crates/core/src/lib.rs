//! Numerics for the complex-shifted, PT-symmetric harmonic oscillator in a
//! truncated Fock space: operators, biorthogonal eigenbases, the metric
//! operator, generalized parity/time/charge involutions, and position-space
//! densities, together with residual checks for each identity they satisfy.

pub mod cli;
pub mod config;
pub mod error;
pub mod linalg;
pub mod involutions;
pub mod metric;
pub mod model;
pub mod position;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
