use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("moment conditions of order {order} violated (residuals {residuals:?})")]
    MomentConditions { order: usize, residuals: Vec<f64> },

    #[error("non-finite value at step {step}")]
    NonFinite { step: usize },

    #[error("no sign change of f on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("trajectory did not return below 1 within {horizon} steps")]
    HorizonExceeded { horizon: usize },

    #[error("kernel grid too coarse: step {step} exceeds {limit}")]
    Aliasing { step: f64, limit: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::NoBracket { .. }
                | Error::HorizonExceeded { .. }
                | Error::MomentConditions { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
