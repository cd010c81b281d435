use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("chart point outside the admissible domain: {0}")]
    DomainViolation(String),
    #[error("metric not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("immersion Jacobian is rank deficient (min singular value² {0:e})")]
    RankDeficient(f64),
    #[error("shape operator symmetry defect {0:e} exceeds 1e-4")]
    SymmetryDefectTooLarge(f64),
    #[error("field does not claim to be a position field")]
    NotAPositionField,
    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("gate violated for {identity}: {gate} (measured {value:e}, limit {limit:e})")]
    GateViolation {
        identity: String,
        gate: String,
        value: f64,
        limit: f64,
    },
    #[error("degenerate scene: normalization {0:e} at round-off level")]
    DegenerateScene(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("expression error at byte {pos}: {msg}")]
    Expression { pos: usize, msg: String },
}

pub type Result<T> = core::result::Result<T, Error>;
