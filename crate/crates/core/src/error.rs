use thiserror::Error;

/// Errors produced by the simulation, averaging, readout and capacity layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErcError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),

    #[error("singular state: {0}")]
    Singularity(String),

    #[error("state diverged at step {step}")]
    Divergence { step: usize },

    #[error("state left the escape bound {bound} at step {step}")]
    Escape { step: usize, bound: f64 },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<ErcError>,
    },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("non-finite value in feature column `{column}`")]
    PoisonedFeature { column: String },

    #[error("duplicate feature column `{0}`")]
    DuplicateColumn(String),

    #[error("unsupported input distribution: {0}")]
    UnsupportedDistribution(String),

    #[error("NARMA10 target became unstable at step {step} (delta = {delta}, mu = {mu})")]
    NarmaInstability { step: usize, delta: f64, mu: f64 },

    #[error("degenerate perturbation: separation collapsed to zero at step {step}")]
    DegeneratePerturbation { step: usize },

    #[error("I/O error: {0}")]
    Io(String),
}

impl ErcError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ErcError::InvalidArgument(msg.into())
    }

    /// True when the error (or the error wrapped by a trial tag) is a numerical divergence.
    pub fn is_divergence(&self) -> bool {
        match self {
            ErcError::Divergence { .. }
            | ErcError::Escape { .. }
            | ErcError::NarmaInstability { .. } => true,
            ErcError::Trial { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}

pub type Result<T, E = ErcError> = std::result::Result<T, E>;
