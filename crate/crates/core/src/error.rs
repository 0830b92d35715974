use thiserror::Error;

/// Every failure the library can report. The variant name is part of the
/// message so that CLI diagnostics carry it verbatim.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("DivisionByZeroFunction: division by the zero rational function")]
    DivisionByZeroFunction,
    #[error("DegenerateComposition: composed denominator vanishes identically")]
    DegenerateComposition,
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
    #[error("SingularJacobian: {0}")]
    SingularJacobian(String),
    #[error("NotLinear: system `{0}` is not linear in its unknowns")]
    NotLinear(String),
    #[error("InconsistentSystem: {0}")]
    InconsistentSystem(String),
    #[error("InvalidSeed: {0}")]
    InvalidSeed(String),
    #[error("NoMonotoneBranch: {0}")]
    NoMonotoneBranch(String),
    #[error("PoleInCoefficients: A = {0} makes the first-rung coefficients singular")]
    PoleInCoefficients(f64),
    #[error("NoPhysicalBranch: {0}")]
    NoPhysicalBranch(String),
    #[error("StalledFlow: {0}")]
    StalledFlow(String),
    #[error("QuadratureFailure: {0}")]
    QuadratureFailure(String),
    #[error("BracketFailure: {0}")]
    BracketFailure(String),
    #[error("NodeMismatch: expected {expected} nodes, found {found}")]
    NodeMismatch { expected: usize, found: usize },
    #[error("GridMismatch: {0}")]
    GridMismatch(String),
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
