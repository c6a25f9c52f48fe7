use alloc::string::String;

/// Failures reported by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point {0} coincides with an atom location")]
    Pole(f64),
    #[error("argument outside the admissible domain: {0}")]
    Domain(String),
    #[error("fixed-point iteration did not converge after {iterations} iterations (last step {last_step:e})")]
    NonConvergence { iterations: usize, last_step: f64 },
    #[error("x = {0} lies inside the bulk support")]
    Support(f64),
    #[error("denominator {0:e} is too close to zero")]
    DivisionNearZero(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("vector norm {0} differs from 1")]
    Norm(f64),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("eigenvalue iteration budget exceeded at index {0}")]
    EigenConvergence(usize),
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    Asymmetry { row: usize, col: usize, gap: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
