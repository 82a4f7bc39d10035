use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate fixed site {0:?}")]
    DuplicateSite(Vec<i64>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid interval set ({lower}, {upper})")]
    InvalidSet { lower: f64, upper: f64 },

    #[error("dependence function vanishes at lag {lag:?} but the ratio is {ratio} (singular lag)")]
    SingularLag { lag: Vec<f64>, ratio: f64 },

    #[error("non-positive threshold {0}")]
    NonPositiveThreshold(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "extremogram undefined: no exceedance of the lower set bound at threshold {threshold}"
    )]
    ZeroDenominator { threshold: f64 },

    #[error("empty lag closure for lag {0:?}")]
    EmptyLagClosure(Vec<i64>),

    #[error("bias correction requires ray sets A=(a,inf), B=(b,inf)")]
    UnsupportedCorrection,

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("lag lists are misaligned: {0}")]
    Misaligned(String),

    #[error("need at least {needed} lags for {params} free parameters, got {got}")]
    TooFewLags {
        needed: usize,
        params: usize,
        got: usize,
    },

    #[error(
        "covariance matrix is not positive definite after jitter escalation (failed at row {row})"
    )]
    NotPositiveDefinite { row: usize },

    #[error("site count {sites} exceeds the dense factorisation cap {cap}")]
    TooManySites { sites: usize, cap: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("too many failures: {failed} of {total} {what} failed")]
    TooManyFailures {
        what: String,
        failed: usize,
        total: usize,
    },

    #[error("field file {path}: {msg}")]
    FieldFormat { path: PathBuf, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::Numerical(_)
            | Error::SingularLag { .. }
            | Error::ZeroDenominator { .. }
            | Error::EmptyLagClosure(_) => 3,
            Error::TooManyFailures { .. } => 4,
            Error::Io(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
