use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("accuracy not reached: {0}")]
    Accuracy(String),
    #[error("search failed: {0}")]
    SearchFailure(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("step failure at t = {t:e}: {msg}")]
    StepFailure { t: f64, msg: String },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("unknown catalog key `{0}`")]
    UnknownSpec(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_stage(self, stage: &str) -> Error {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }

    /// Innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
