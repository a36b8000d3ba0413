use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid ring parameters: {0}")]
    InvalidParams(String),

    #[error("Hensel lifting of the Frobenius root did not converge")]
    HenselFailure,

    #[error("element is not a unit")]
    NotAUnit,

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("matrix is not integral: {0}")]
    NotIntegral(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("polygon endpoints differ: upper ends at {upper}, lower ends at {lower}")]
    EndpointMismatch { upper: String, lower: String },

    #[error("no break in the Newton polygon at abscissa {0}")]
    NoBreak(usize),

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("break abscissa {a} must be strictly below n/2 for rank {n}")]
    RankTooLarge { a: usize, n: usize },

    #[error("invalid exponent list: {0}")]
    InvalidMu(String),

    #[error("mismatched family: {0}")]
    FamilyMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn precision(msg: impl Into<String>) -> Self {
        Error::PrecisionExhausted(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
