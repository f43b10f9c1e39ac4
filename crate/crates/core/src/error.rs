use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::jet::JetError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{source} at point {point:?}")]
    Eval { source: EvalError, point: Vec<f64> },
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("point {point:?} lies outside the chart domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("metric is not symmetric at {point:?}: |g[{i}][{j}] - g[{j}][{i}]| = {gap:e}")]
    NotSymmetric { point: Vec<f64>, i: usize, j: usize, gap: f64 },
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("conformal factor is not positive at {point:?} (value {value})")]
    NonPositiveFactor { point: Vec<f64>, value: f64 },
    #[error("map is not harmonic at {point:?}: |tension| = {norm:e}")]
    NotHarmonic { point: Vec<f64>, norm: f64 },
    #[error("map is not conformal at {point:?}: relative deviation {deviation:e}")]
    NonConformal { point: Vec<f64>, deviation: f64 },
    #[error("map is not an immersion at {point:?}")]
    Degenerate { point: Vec<f64> },
    #[error("target is not flat Euclidean space in Cartesian coordinates")]
    NonFlatTarget,
    #[error("lambda^2 = {value} is not positive at z = {z}")]
    NonPositiveLambda { z: f64, value: f64 },
    #[error("unknown case {0}")]
    UnknownCase(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn eval(source: EvalError, point: &[f64]) -> Self {
        Error::Eval { source, point: point.to_vec() }
    }

    /// Evaluation outside a function's domain or outside a chart.
    pub fn is_domain_violation(&self) -> bool {
        matches!(
            self,
            Error::Eval { source: EvalError::Domain { .. }, .. }
                | Error::OutsideDomain { .. }
                | Error::NonPositiveLambda { .. }
                | Error::NonPositiveFactor { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
