use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("preprocessing error: {0}")]
    Preprocess(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("sampler error: {0}")]
    Sampler(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("unknown dataset '{id}'; registered: {known:?}")]
    UnknownDataset { id: String, known: Vec<String> },

    #[error("unknown metric '{name}'; valid: {known:?}")]
    UnknownMetric { name: String, known: Vec<String> },

    #[error("config error: {0}")]
    Config(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
