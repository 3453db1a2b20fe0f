use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("k = {k} is out of range for dimension n = {n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("dimension must be at least 3, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("eigenvalues lie outside the admissible cone")]
    ConeViolation,

    /// Radial nodes whose Schouten eigenvalues left the cone.
    #[error("cone violation at {} radial node(s)", nodes.len())]
    ConeViolationAt { nodes: Vec<usize> },

    #[error("field value {0} is not positive")]
    NonpositiveValue(f64),

    #[error("point lies outside the field's domain")]
    Domain,

    #[error("Kelvin transform evaluated at its center")]
    SingularCenter,

    #[error("no admissible Newton step within the damping budget ({} offending node(s))", nodes.len())]
    ConeExit { nodes: Vec<usize> },

    #[error("Jacobian is numerically singular (pivot {pivot:e})")]
    SingularJacobian { pivot: f64 },

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIter { iterations: usize, residual: f64 },

    #[error("far-field tail condition not met: log-slope {slope} vs expected {expected}")]
    TailCondition { slope: f64, expected: f64 },

    #[error("continuation stalled at t = {t} (step underflow)")]
    ContinuationStall { t: f64 },

    #[error("Newton solve failed at t = {t}: {source}")]
    AtHomotopyParameter {
        t: f64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    #[error("no certified radius found")]
    NotFound,

    #[error("touching preconditions fail: value gap {value_gap:e}, gradient gap {gradient_gap:e}")]
    NotTouching { value_gap: f64, gradient_gap: f64 },
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::KOutOfRange { .. } => "K_OUT_OF_RANGE",
            Error::DimensionTooSmall(_) => "DIMENSION",
            Error::DimensionMismatch { .. } => "DIMENSION",
            Error::NonFinite => "NON_FINITE",
            Error::InvalidParameter(_) => "INVALID_PARAMETER",
            Error::ConeViolation | Error::ConeViolationAt { .. } => "CONE_VIOLATION",
            Error::NonpositiveValue(_) => "NONPOSITIVE_VALUE",
            Error::Domain => "DOMAIN",
            Error::SingularCenter => "SINGULAR_CENTER",
            Error::ConeExit { .. } => "CONE_EXIT",
            Error::SingularJacobian { .. } => "SINGULAR_JACOBIAN",
            Error::MaxIter { .. } => "MAX_ITER",
            Error::TailCondition { .. } => "TAIL_CONDITION",
            Error::ContinuationStall { .. } => "CONTINUATION_STALL",
            Error::AtHomotopyParameter { source, .. } => source.code(),
            Error::NotFound => "NOT_FOUND",
            Error::NotTouching { .. } => "NOT_TOUCHING",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
