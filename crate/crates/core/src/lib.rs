//! Two-step Star estimator for square-loss regression, with the offset
//! Rademacher complexity machinery around it: exact suprema of the offset
//! process over finite / linear / star-shaped families, Monte Carlo
//! estimation, empirical covers and chaining bounds, critical radii, lower
//! isometry checks, and a reproducible experiment harness that verifies the
//! predicted rates at desk scale.
//!
//! The estimator fits an empirical risk minimizer first and then re-fits over
//! the star hull of the class around that first fit. Its excess loss is
//! controlled by a geometric inequality (audited in [`geometry`]) and, in
//! turn, by offset complexities (computed in [`offset`] and bounded via
//! covers in [`chaining`]).
//!
//! Everything randomized takes an explicit seed and is bit-reproducible,
//! including under the parallel Monte Carlo paths.

pub mod chaining;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod model;
pub mod offset;
pub mod seeding;
pub mod stats;

pub use error::{Error, Result};
