//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the numerical, statistical and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotSpd { min_eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("root is not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("{p} frequencies requested but the grid only has {r} points")]
    ResolutionExceeded { p: usize, r: usize },

    #[error("{0} is rank deficient")]
    RankDeficient(&'static str),

    #[error("insufficient residual degrees of freedom: n*N = {observations}, P = {parameters}")]
    InsufficientDf {
        observations: usize,
        parameters: usize,
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("group {0} has no units")]
    EmptyGroup(usize),

    #[error("hypothesis matrix has rank zero")]
    DegenerateHypothesis,

    #[error("weight {value} at frequency {index} is outside (0, 1]")]
    InvalidWeight { index: usize, value: f64 },

    #[error("weights increase at frequency {index}")]
    NotMonotone { index: usize },

    #[error("statistic requires nu = 1, model has nu = {0}")]
    UnsupportedNu(usize),

    #[error("position {l} is outside 1..=2^{k}")]
    InvalidPosition { k: u32, l: usize },

    #[error("model has {found} frequencies, statistic needs at least {needed}")]
    InsufficientP { needed: usize, found: usize },

    #[error("no cutoff supplied for the configuration with k** = {0}")]
    MissingCutoff(u32),

    #[error("empty Monte Carlo sample")]
    EmptySample,

    #[error("index {index} is outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("shape parameter b = {0} is outside (0, 1)")]
    InvalidB(f64),

    #[error("moving-average coefficients are all zero")]
    AllZeroGamma,

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("time column is not strictly increasing at row {row}")]
    NonMonotoneTime { row: usize },

    #[error("input file has no data rows")]
    EmptyFile,

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    InvalidConfig(Vec<String>),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps the error with command-level context.
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Context { source, .. } => source.exit_code(),
            Error::InvalidConfig(_) | Error::InvalidParameter(_) | Error::InvalidRule(_) => 1,
            Error::Parse { .. }
            | Error::NonMonotoneTime { .. }
            | Error::EmptyFile
            | Error::Io(_)
            | Error::Csv(_)
            | Error::EmptyGroup(_)
            | Error::LengthMismatch { .. }
            | Error::DimensionMismatch(_) => 2,
            _ => 3,
        }
    }
}
