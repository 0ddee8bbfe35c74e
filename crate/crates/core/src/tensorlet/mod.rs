//! Small dense-matrix kernel with hand-written backward passes.
//!
//! Everything is `f64` and every reduction runs in a fixed order, so results
//! are bit-reproducible for identical inputs.

mod checkpoint;
mod gradcheck;
mod init;
mod layers;
mod matrix;
pub mod rng;

pub use checkpoint::{parse_checkpoint, write_checkpoint, CHECKPOINT_HEADER};
pub use gradcheck::{finite_difference_check, relative_error};
pub use init::{seeded_init, InitScheme};
pub use layers::{mse_loss, relu, relu_backward, softmax_backward, softmax_rows, EmbeddingTable, LinearLayer};
pub use matrix::Matrix;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix data has {got} values, {rows}x{cols} needs {}", rows * cols)]
    DataLength { rows: usize, cols: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("backward called before forward")]
    BackwardBeforeForward,
    #[error("empty input to {0}")]
    Empty(&'static str),
    #[error("index {index} out of range for vocabulary of {vocab}")]
    Index { index: usize, vocab: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
}
