use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input data. `row` is 1-based and counts the header line when
    /// one is present, so it matches what an editor shows.
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error(
        "exact Shapley enumeration over {features} features exceeds the cap of {cap}; use permutation sampling instead"
    )]
    TooManyFeatures { features: usize, cap: usize },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("serialization: {0}")]
    Serde(String),

    /// Failure inside one stage of an experiment run.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }

    /// True for failures of the numerical procedures themselves, as opposed
    /// to bad input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(self.root(), Error::Divergence { .. } | Error::Singular(_))
    }

    /// The underlying error with any stage tags removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage { stage, source: Box::new(e) }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
