//! LSTM and child-sum TreeLSTM binary-relevance classifiers.
//!
//! Each sub-algorithm gets its own [`ClassifierStack`]: token embedding,
//! two recurrent layers, dropout on the second layer's output, a rectified
//! dense layer and a single sigmoid unit. The LSTM and TreeLSTM variants
//! differ only in the recurrence, and gradients are computed by explicit
//! reverse-mode passes over each layer.

mod cell;
mod stack;
mod tensor;
mod train;


pub use cell::{lstm_backward, lstm_forward, tree_backward, tree_forward, CellParams, LayerCache};
pub use stack::{dropout_mask, loss_bce, CellKind, ClassifierStack, Dims, Input, Mode, Trace};
pub use tensor::Tensor;
pub use train::{
    model_encoding, positive_weight, train, BinaryRelevanceModel, Checkpoint, ClassifierFile, Example, NamedTensor,
    TrainReport, CHECKPOINT_FORMAT, CHECKPOINT_VERSION, POS_WEIGHT_RANGE,
};

use crate::calculus::SubAlgorithmId;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("empty model input")]
    EmptyInput,
    #[error("token id {id} outside a vocabulary of {vocab}")]
    TokenOutOfRange { id: u32, vocab: usize },
    #[error("non-finite loss or gradient in classifier {classifier} at epoch {epoch}")]
    NonFinite { classifier: SubAlgorithmId, epoch: usize },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}
