//! Numerical laboratory for periodic homogenization of stable-like
//! nonlocal operators with divergence-free drifts.

pub mod discretize;
pub mod environment;
mod error;
pub mod fft;
pub mod grid;
pub mod harness;
pub mod limit;
pub mod linalg;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
