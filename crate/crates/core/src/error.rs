use std::path::PathBuf;

/// Errors produced anywhere in the feature-extraction and classification pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or insufficient input data (empty vectors, non-dyadic lengths, missing classes).
    #[error("invalid input: {0}")]
    Input(String),

    /// A parameter is outside its supported range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A decomposition or matrix whose parts are inconsistent with each other.
    #[error("inconsistent structure: {0}")]
    Structure(String),

    /// A detail level carried zero energy, so its log-energy is undefined.
    #[error("degenerate energy at level {level}{}", window.map(|w| format!(" (window {w})")).unwrap_or_default())]
    DegenerateEnergy { level: u32, window: Option<usize> },

    /// A statistic whose denominator vanished.
    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    #[error("solver did not converge after {iterations} iterations")]
    Convergence { iterations: usize },

    /// Samples in a dataset disagree on the m/z grid, or a directory layout is wrong.
    #[error("ingestion error in {}: {message}", path.display())]
    Ingestion { path: PathBuf, message: String },

    #[error("parse error in {} at line {line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    /// A failure inside one repetition of a repeated experiment.
    #[error("repetition with seed {seed} failed: {source}")]
    Repetition {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    /// A pipeline stage failure, labelled by the stage name.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error, skipping stage and repetition wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::Repetition { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for numerical failures (non-convergence) as opposed to bad data or parameters.
    pub fn is_numerical(&self) -> bool {
        matches!(self.root(), Error::Convergence { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
