use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Ingest {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: not a number: {content:?}")]
    Parse {
        path: PathBuf,
        line: usize,
        content: String,
    },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid downsampling target: {0}")]
    InvalidTarget(String),

    #[error("invalid bucketing: {0}")]
    InvalidBucketing(String),

    #[error("series of length {len} is shorter than the embedding window {window}")]
    InvalidWindow { len: usize, window: usize },

    #[error("degenerate point cloud: all points coincide")]
    DegenerateCloud,

    #[error(
        "Rips complex exceeds the simplex cap ({count} > {cap}); reduce the chunk length or the filtration radius"
    )]
    ComplexityCap { count: usize, cap: usize },

    #[error("naive Betti oracle limited to {cap} points, got {n}")]
    OracleScale { n: usize, cap: usize },

    #[error("symmetric eigensolver did not converge for a matrix of order {order}")]
    Eigensolver { order: usize },

    #[error("eigensolver failed at epsilon = {epsilon}: matrix of order {order}")]
    EigensolverAt { epsilon: f64, order: usize },

    #[error("invalid tau partition: {0}")]
    InvalidTaus(String),

    #[error("architecture infeasible: {layer} has length {len}")]
    ArchitectureInfeasible { layer: &'static str, len: i64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("training diverged (NaN loss) at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("cannot split {n} samples into {k} folds")]
    TooFewSamples { n: usize, k: usize },

    #[error("metric undefined on an empty dataset")]
    EmptyDataset,

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("unknown config key `{0}`")]
    UnknownConfigKey(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by bad user input rather than a processing failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidTarget(_)
                | Error::UnknownConfigKey(_)
                | Error::Config { .. }
                | Error::InvalidTaus(_)
        )
    }
}
