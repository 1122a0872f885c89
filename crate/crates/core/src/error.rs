use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty range [{lo}, {hi})")]
    EmptyRange { lo: u64, hi: u64 },

    #[error("divisor-function order must be at least 2, got {0}")]
    InvalidOrder(u32),

    #[error("resource budget exceeded: {what} needs {needed}, limit is {limit}")]
    BudgetExceeded {
        what: &'static str,
        needed: u64,
        limit: u64,
    },

    #[error("argument must be positive: {0}")]
    ZeroArgument(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("constant bracket too wide: width {width:e} times x = {x} exceeds resolution {resolution:e}")]
    BracketTooWide { width: f64, x: u64, resolution: f64 },

    #[error("need at least 3 usable points for a fit, got {usable} ({excluded} excluded)")]
    InsufficientPoints { usable: usize, excluded: usize },

    #[error("infeasible box constraint on `{0}`")]
    InfeasibleBox(String),

    #[error("objective is unbounded below")]
    Unbounded,

    #[error("missing value for parameter `{0}`")]
    MissingParameter(String),

    #[error("scenario shape {shape} is incompatible with bound {bound}")]
    IncompatibleShape {
        shape: &'static str,
        bound: &'static str,
    },

    #[error("invalid exponent pair: {0}")]
    InvalidPair(String),

    #[error("cache file is malformed: {0}")]
    BadCache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by inputs outside an operation's mathematical domain.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::EmptyRange { .. }
                | Error::InvalidOrder(_)
                | Error::ZeroArgument(_)
                | Error::Domain(_)
                | Error::InfeasibleBox(_)
                | Error::Unbounded
                | Error::InsufficientPoints { .. }
                | Error::BracketTooWide { .. }
                | Error::IncompatibleShape { .. }
                | Error::InvalidPair(_)
        )
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}
