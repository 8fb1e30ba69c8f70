use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("distance {0} m is below the path-loss model validity range")]
    DistanceOutOfRange(f64),
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("empty sample set: {0}")]
    EmptySamples(String),
    #[error("malformed BLER table at line {line}: {msg}")]
    BlerTable { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
