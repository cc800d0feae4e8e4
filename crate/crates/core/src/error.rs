use thiserror::Error;

/// Errors produced by tree construction, policy validation, solvers and the run harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game file: {0}")]
    InvalidGameFile(String),
    #[error("children sets do not partition layer {layer}: {detail}")]
    NotAPartition { layer: usize, detail: String },
    #[error("unknown infoset `{0}`")]
    UnknownInfoset(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid layer {0}")]
    InvalidLayer(usize),
    #[error("enumeration of {what} exceeds cap {cap}")]
    CapExceeded { what: &'static str, cap: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("fixed point not found: residual {residual:e}")]
    FixedPoint { residual: f64 },
    #[error("visited sequence {seq} has zero reach under the sampling policy")]
    ZeroReach { seq: usize },
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("episode {episode}: {source}")]
    Episode {
        episode: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn at_episode(self, episode: usize) -> Self {
        Error::Episode {
            episode,
            source: Box::new(self),
        }
    }
}
