//! Dual decomposition solvers for separable convex programs with linear
//! coupling, built on barrier smoothing of the Lagrangian dual.

pub mod barrier;
pub mod error;

pub use error::{Error, Result};
