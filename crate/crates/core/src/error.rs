use thiserror::Error;

/// Errors raised by state construction, metrics, channels and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square or has the wrong shape: {0}")]
    Shape(String),

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("not Hermitian (max asymmetry {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("trace is not 1 (got {trace})")]
    NotUnitTrace { trace: f64 },

    #[error("not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("coordinate vector has length {found}, expected {expected}")]
    WrongLength { expected: usize, found: usize },

    #[error("operation requires a {expected}-level system, got d = {found}")]
    WrongLevel { expected: usize, found: usize },

    #[error("Bloch vector outside the unit ball (r = {radius})")]
    OutOfBall { radius: f64 },

    #[error("state is not faithful (min eigenvalue {min_eigenvalue:e})")]
    NotFaithful { min_eigenvalue: f64 },

    #[error("second argument of the divergence is not faithful (min eigenvalue {min_eigenvalue:e})")]
    SecondArgNotFaithful { min_eigenvalue: f64 },

    #[error("site must be a mixed state (r = {radius})")]
    SiteIsPure { radius: f64 },

    #[error("state is not pure (rank {rank})")]
    NotPure { rank: usize },

    #[error("Bloch vector not on the unit sphere (r = {radius})")]
    NotOnSphere { radius: f64 },

    #[error("matrix function domain error: {0}")]
    Domain(String),

    #[error("channel is not trace preserving (deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error("Kraus set cannot be completed (I - sum V^dag V has eigenvalue {min_eigenvalue:e})")]
    NotCompletable { min_eigenvalue: f64 },

    #[error("invalid mesh specification: {0}")]
    InvalidMesh(String),

    #[error("mesh produced no points")]
    EmptyMesh,

    #[error("empty point set")]
    EmptyInput,

    #[error("affinely dependent boundary set")]
    Degenerate,

    #[error("section site is off the pure ellipsoid (equation value {value})")]
    OffEllipsoid { value: f64 },

    #[error("section analysis needs d >= 3, got d = {0}")]
    DimTooSmall(usize),

    #[error("boundary subsolver failed: {0}")]
    SubsolverFailed(String),

    #[error("enclosing ball needs more than {max_boundary} boundary points (max excess {excess:e})")]
    TooManyBoundary { max_boundary: usize, excess: f64 },

    #[error("metric {metric} does not apply: {reason}")]
    MetricNotApplicable { metric: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
