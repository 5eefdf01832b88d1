use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension d={0}: {1}")]
    InvalidDimension(u32, String),

    #[error("dimension too large for exact oracle: d={d} (max {max})")]
    DimensionTooLarge { d: u32, max: u32 },

    #[error("vertex set mixes parity classes")]
    MixedParity,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("size cap exceeded: {0}")]
    SizeCapExceeded(String),

    #[error("interpolation check failed: {0}")]
    InterpolationCheckFailed(String),

    #[error("division by a polynomial that is not a stored base power: {0}")]
    NonBaseDivision(String),

    #[error("variable mismatch: {0}")]
    VariableMismatch(String),

    #[error("linear coefficient unexpectedly zero: {0}")]
    ZeroLinearCoefficient(String),

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("insufficient samples: have {have}, need {need}")]
    InsufficientSamples { have: usize, need: usize },

    #[error("unknown observable: {0}")]
    UnknownObservable(String),

    #[error("type split: {0}")]
    TypeSplit(String),
}

impl Error {
    /// Budget-style failures map to a distinct CLI exit code.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded(_) | Error::SizeCapExceeded(_))
    }
}
