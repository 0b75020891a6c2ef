use std::path::PathBuf;

/// Errors produced anywhere in the planning pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("duplicate key `{0}`")]
    DuplicateKey(String),

    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error(
        "minority class has a single instance; SMOTE needs at least two \
         (enable `duplicate_singleton` to replicate it instead)"
    )]
    SingletonMinority,

    #[error("unknown prompt template `{name}` (available: {available})")]
    UnknownTemplate { name: String, available: String },

    #[error("discretization scheme mismatch: rules built with {expected}, got {found}")]
    SchemeMismatch { expected: String, found: String },

    #[error("credential error: {0}")]
    Credential(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("transient endpoint failure after {attempts} attempts: {message}")]
    Transient { attempts: u32, message: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// Wraps `self` with the name of the pipeline stage that failed.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 3 for internal invariant violations, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Invariant(_) => 3,
            _ => 2,
        }
    }
}

/// Attaches a stage name to any error of a result.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
