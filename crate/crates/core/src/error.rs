use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sample {id:?} has a non-finite {field} value")]
    NonFinite { id: String, field: &'static str },

    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),

    #[error("too few sample points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("an adaptive bandwidth was required but a fixed bandwidth was given")]
    WrongBandwidthKind,

    #[error("bandwidth must be positive and finite, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("invalid kernel specification: {0}")]
    InvalidKernel(String),

    #[error("adaptive bandwidth resolved to zero at ({x}, {y}): the nearest neighbours coincide with the center")]
    DegenerateBandwidth { x: f64, y: f64 },

    #[error("no sample point lies inside the kernel support")]
    EmptySupport,

    #[error("correlation magnitude {0} exceeds 1 beyond rounding slack")]
    NumericalBlowup(f64),

    #[error("invalid evaluation grid: {0}")]
    InvalidGrid(String),

    #[error("grid of {cells} cells exceeds the cap of {cap}")]
    GridTooLarge { cells: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("CoincidentPoints: samples {0:?} and {1:?} share a location")]
    CoincidentPoints(String, String),

    #[error("ZeroVariance: all deviations are equal")]
    ZeroVariance,

    #[error("missing required column {0:?}")]
    MissingColumn(String),

    #[error("line {line}: cannot parse {column} value {token:?}")]
    Parse {
        line: u64,
        column: String,
        token: String,
    },

    #[error("line {line}: {source}")]
    AtLine {
        line: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed grid file: {0}")]
    GridFormat(String),

    #[error("unknown scenario {0:?} (expected null, cluster or bias)")]
    UnknownScenario(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
