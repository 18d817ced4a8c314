use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least {needed} updates, got {found}")]
    TooFewUpdates { needed: usize, found: usize },

    #[error("update of client {client} has length {found}, expected {expected}")]
    LengthMismatch {
        client: usize,
        expected: usize,
        found: usize,
    },

    #[error("vectors must have at least 2 components, got {0}")]
    VectorTooShort(usize),

    #[error("zero-variance input, correlation undefined")]
    DegenerateInput,

    #[error("invalid correlation matrix: {0}")]
    InvalidMatrix(String),

    #[error("detector needs at least 3 clients, got {0}")]
    TooFewClients(usize),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid class {class} (num_classes = {num_classes})")]
    InvalidClass { class: usize, num_classes: usize },

    #[error("dirichlet concentration must be > 0, got {0}")]
    InvalidAlpha(f64),

    #[error("cannot split {samples} samples across {clients} clients")]
    NotEnoughSamples { samples: usize, clients: usize },

    #[error("local training of client {client} diverged (loss = {loss})")]
    Diverged { client: usize, loss: f64 },

    #[error("{path}: bad IDX magic {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated IDX file ({needed} bytes needed, {found} present)")]
    Truncated {
        path: PathBuf,
        needed: usize,
        found: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("every client was excluded from aggregation")]
    AllExcluded,

    #[error("no samples of the targeted classes in the evaluation set")]
    NoTargetedSamples,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
