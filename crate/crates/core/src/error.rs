use crate::sdp::SdpStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point coincides with an anchor (distance {distance:.3e} m)")]
    CoincidentPoints { distance: f64 },

    #[error("path-loss exponent must be positive, got {0}")]
    NonPositiveGamma(f64),

    #[error("linear model is rank deficient (condition number {condition:.3e})")]
    SingularModel { condition: f64 },

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(&'static str),

    #[error("trust-region hard case: multiplier root at the interval boundary {boundary:.6e}")]
    HardCase { boundary: f64 },

    #[error("no sign change of the constraint function after {doublings} doublings")]
    BracketNotFound { doublings: usize },

    #[error("SDP solve ended with status {status:?} after {iterations} iterations")]
    Sdp { status: SdpStatus, iterations: usize },

    #[error("matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("Fisher information matrix is singular")]
    SingularFim,

    #[error("failed to parse scenario file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
