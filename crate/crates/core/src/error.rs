use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong in the pipeline.
///
/// Variants fall into three families (configuration, data, numeric) which
/// map onto the process exit codes used by the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("row count mismatch: header declares {declared} rows, found {found}")]
    RowCount { declared: usize, found: usize },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("tumor_ratio {value} out of [0,1] at row {row}")]
    TumorRatio { row: usize, value: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("corrupt or incompatible file: {0}")]
    Format(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable family name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => "config",
            Error::NonFinite(_) | Error::Diverged { .. } => "numeric",
            Error::Stage { source, .. } => source.kind(),
            _ => "data",
        }
    }

    /// Process exit code: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" => 2,
            "numeric" => 4,
            _ => 3,
        }
    }
}
