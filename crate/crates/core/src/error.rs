use thiserror::Error;

/// Errors raised by the engine. Search stages that simply find nothing are
/// reported through their result types, not through this enum.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no data")]
    NoData,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("enumeration infeasible: {0}")]
    EnumerationInfeasible(String),
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u32),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
