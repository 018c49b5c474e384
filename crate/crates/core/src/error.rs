use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A bar violates the OHLC constraints in a way sanitization cannot repair.
    #[error("invalid bar at row {row}: {reason}")]
    InvalidBar { row: usize, reason: String },

    #[error("series is empty after removing suspended periods")]
    EmptySeries,

    /// The bar sits on a boundary (open or close equal to low/high, or high = low).
    #[error("bar is on the constraint boundary ({0}); sanitize the series first")]
    BoundaryBar(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A transformed component is too large to exponentiate safely.
    #[error("transformed component y{index} = {value} would overflow on inversion")]
    Overflow { index: usize, value: f64 },

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("rank-deficient regressors in {0}")]
    RankDeficient(&'static str),

    #[error("singular moment matrix in {0}")]
    Singular(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unstable coefficient matrices: companion spectral radius {0:.6} >= 1")]
    Unstable(f64),

    #[error("noise covariance is not positive semidefinite")]
    NotPositiveSemidefinite,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
