use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("problem too large for a direct extensive-form solve ({variables} > {limit} second-stage variables); use Benders decomposition")]
    TooLarge { variables: usize, limit: usize },
    #[error("malformed data: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
