use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-numeric cell at row {row}, column `{col}`")]
    NonNumericCell { row: usize, col: String },
    #[error("invalid time stamp `{value}` at row {row}")]
    InvalidTime { row: usize, value: String },
    #[error("duplicate time stamp {0}")]
    DuplicateTime(String),
    #[error("negative GHI value {value} at {time}")]
    NegativeGhi { time: String, value: f64 },
    #[error("invalid observation value {value} at {time}")]
    InvalidObservation { time: String, value: f64 },
    #[error("inconsistent member count: expected {expected}, found {found}")]
    MemberCount { expected: usize, found: usize },
    #[error("unknown time stamp convention `{0}`")]
    UnknownConvention(String),
    #[error("empty {0} split")]
    EmptySplit(&'static str),

    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),
    #[error("ensemble needs at least 2 members, got {0}")]
    TooFewMembers(usize),

    #[error("missing covariate `{name}` at {time}")]
    MissingCovariate { name: String, time: String },
    #[error("invalid plant specification: {0}")]
    InvalidPlant(String),

    #[error("need at least {needed} rows to fit, got {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("local hour {0} has too few training rows")]
    InsufficientHourData(u8),
    #[error("observation {value} outside censoring bounds [{lower}, {upper}]")]
    ObservationOutOfBounds { value: f64, lower: f64, upper: f64 },
    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),
    #[error("model has not been fitted")]
    UnfittedModel,
    #[error("scaling group for hour {0} has fewer than 2 rows")]
    EmptyGroup(u8),

    #[error("forecast and observation indices differ: {0}")]
    IndexMismatch(String),
    #[error("reference score is zero")]
    ZeroReference,

    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
}

/// Process exit status classes used by the command-line runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Fit,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Fit => 4,
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Config(_) | InvalidStrategy(_) | InvalidPlant(_) | UnknownConvention(_) => ErrorClass::Config,
            TooFewRows { .. }
            | InsufficientHourData(_)
            | ObservationOutOfBounds { .. }
            | NonConvergence(_)
            | UnfittedModel
            | EmptyGroup(_)
            | ZeroReference => ErrorClass::Fit,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
