//! FDR-calibrated thresholding for sparse Gaussian means: the quantile
//! boundary, the step-up, step-down and penalized selectors, exact and
//! simulated risk, and the mean-exceedance machinery used to analyse them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod boundary;
pub mod detection;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod gauss;
pub mod io;
pub mod quadrature;
pub mod risk;
pub mod rng;
pub mod spaces;

pub use boundary::FdrBoundary;
pub use error::{Error, Result};
pub use estimators::{Method, SelectionResult, ThresholdEstimate};
pub use spaces::{BallKind, Configuration, ParameterBall};
