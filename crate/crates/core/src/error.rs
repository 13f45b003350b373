use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "truncated gamma(shape={shape}, rate={rate}) on [{lo}, {hi}] has no usable mass after {attempts} rejections"
    )]
    TruncationUnderflow {
        shape: f64,
        rate: f64,
        lo: f64,
        hi: f64,
        attempts: usize,
    },

    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("row {row}: field `{field}` out of range: {value:?}")]
    FieldOutOfRange {
        row: usize,
        field: &'static str,
        value: String,
    },

    #[error("purchase date {date} is after the survey date {survey}")]
    FutureDate { date: String, survey: String },

    #[error("{0}")]
    Validation(String),

    #[error("non-finite {term} in log-density")]
    NonFinite { term: String },

    #[error("sampling failed in block `{block}` at iteration {iteration}: {message}")]
    Sampling {
        block: String,
        iteration: usize,
        message: String,
    },

    #[error("log-posterior not finite at initialization after {attempts} attempts")]
    Initialization { attempts: usize },

    #[error("missing population stratum for {0}")]
    MissingStratum(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidParameter(msg.to_string())
    }

    /// Whether the error stems from numerical trouble rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TruncationUnderflow { .. }
                | Error::NonFinite { .. }
                | Error::Sampling { .. }
                | Error::Initialization { .. }
        )
    }
}
