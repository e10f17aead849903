//! Diffusive SI epidemic model with nonlinear incidence `β S^q I^p`:
//! finite-volume Neumann grids, an IMEX solver, long-time diagnostics,
//! periodic-parabolic spectral thresholds, the reduced ODE models and a
//! scenario harness.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod harness;
mod linalg;
pub mod model;
pub mod ode;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
