use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty sample")]
    EmptySample,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("value {value} at index {index} outside [{lo}, {hi}]")]
    RangeViolation {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("ragged matrix: row {row} has length {len}, expected {expected}")]
    RaggedMatrix {
        row: usize,
        len: usize,
        expected: usize,
    },

    #[error("importance weight {weight} at index {index} outside [0, 1]")]
    WeightOutOfRange { index: usize, weight: f64 },

    #[error("density weight queried at a correctly classified point")]
    NotMisclassified,

    #[error("training diverged at step {step}: loss is not finite")]
    Divergence { step: usize },

    #[error("model weight vector has zero norm")]
    ZeroWeightVector,

    #[error("training gate failed: {0}")]
    TrainingGate(String),

    #[error("AEG condition violated: {0}")]
    AegCondition(String),

    #[error("epsilon {epsilon} exceeds the maximum valid translation {max} for pad {pad}")]
    EpsilonTooLarge { epsilon: u32, max: u32, pad: u32 },

    #[error("translation leaves the padded region: offset ({x}, {y}) with pad {pad}")]
    OutOfPad { x: i64, y: i64, pad: u32 },

    #[error("classifier does not provide logits")]
    MissingLogits,

    #[error("universe error: {0}")]
    Universe(String),

    #[error("insufficient runs: {runs} runs cannot fill a bin of size {bin}")]
    InsufficientRuns { runs: usize, bin: usize },

    #[error("parse error at {location}: {reason}")]
    Parse { location: String, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("run failed (epsilon index {epsilon_index}, seed {seed}): {source}")]
    Run {
        epsilon_index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
