//! Bidirectional GRU with linear self-attention for binary sentence
//! classification, trained with Adam.

mod checkpoint;
mod linalg;
mod model;
mod optim;
mod params;
mod train;

use std::path::PathBuf;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use linalg::Real;
pub use model::{
    attend, bigru_forward, forward_batch, forward_eval, gru_step, loss, predict, AttentionOutput, Dropout,
    ForwardTrace, PROB_CLAMP,
};
pub use optim::{clip_gradients, global_norm, AdamConfig, AdamState, LrSchedule};
pub use params::{BiGruAttParams, GruCellParams, ResetPlacement, BLOCK_NAMES};
pub use train::{infer, prepare_examples, train, EpochRecord, Example, TrainConfig, TrainOutcome};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: {message}")]
    Diverged { epoch: usize, batch: usize, message: String },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Embedding(#[from] crate::embeddings::EmbeddingError),
}
