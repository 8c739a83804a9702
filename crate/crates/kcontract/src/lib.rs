//! Numerical toolkit for contractive commuting matrix tuples relative to a
//! one-variable kernel with positive Taylor coefficients: reproducing-kernel
//! function spaces on the ball, shift tuples, defect operators, canonical
//! dilations, transfer-function realizations, and positivity diagnostics.

pub mod contraction;
pub mod corpus;
pub mod dilation;
pub mod error;
pub mod job;
pub mod metric;
pub mod realization;
pub mod series;
pub mod space;

pub use error::{Error, Result};
