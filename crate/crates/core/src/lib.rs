//! Minimum distance Lasso: robust sparse linear regression.
//!
//! The loss `-c log sum_i exp(-r_i^2 / (2c))` caps the influence of gross
//! outliers through the scaling parameter `c`; large `c` recovers the
//! ordinary Lasso. This crate provides the loss and its derivatives, a
//! composite gradient solver, an iteratively reweighted Lasso solver,
//! baseline estimators behind a common registry, calculators for the
//! statistical error bounds, and a seeded simulation harness.

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod io;
pub mod linalg;
pub mod loss;
pub mod model;
pub mod prox;
pub mod sim;
pub mod theory;

pub use error::{MdLassoError, Result};
pub use loss::{MdLossParams, WeightVector};
pub use model::{Coefficients, Dataset, FitResult};
