use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval: lo {lo:?} exceeds hi {hi:?}")]
    InvalidInterval { lo: [f64; 2], hi: [f64; 2] },

    #[error("zonotope has no generators; handle point zonotopes separately")]
    NoGenerators,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("no obstacles")]
    NoObstacles,

    #[error("empty input to {0}")]
    EmptyInput(&'static str),

    #[error("time-interval mismatch: reachable set has {reach} intervals, obstacle has {obstacle}")]
    IntervalMismatch { reach: usize, obstacle: usize },

    #[error("trajectory parameter {p:?} outside bin {bin}")]
    ParamOutOfBin { p: [f64; 2], bin: usize },

    #[error("initial speed {v} m/s outside validity [{lo}, {hi}] of bin {bin}")]
    SpeedOutOfRange { v: f64, lo: f64, hi: f64, bin: usize },

    #[error("containment verification failed for bin {bin}, interval {interval} after {rounds} inflation rounds (worst excess {excess:.3e} m)")]
    ContainmentFailed {
        bin: usize,
        interval: usize,
        rounds: usize,
        excess: f64,
    },

    #[error("network bound violated: {0}")]
    BoundViolation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
