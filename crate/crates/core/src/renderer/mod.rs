//! Intensity-conditioned accent renderer at desk scale.
//!
//! Phoneme embeddings are concatenated with a linear encoding of each
//! phoneme's accent intensity. Three small perceptrons predict pitch, energy
//! and log-duration from that concatenation; the pitch and energy
//! predictions are projected back to the concatenated width and added on.
//! The length regulator repeats each row by its duration and a linear
//! decoder maps every frame to mel channels.

mod export;
mod forward;
mod params;
mod train;

pub use export::{frame_csv, load_params, phoneme_csv, save_params};
pub use forward::{encode_intensity, encode_phonemes, length_regulate, render, render_uniform, RenderOutput};
pub use params::{Predictor, RendererConfig, RendererParams, TargetNorm};
pub use train::{
    loss_and_gradients, spearman, synth_corpus, train_toy, Batch, LossBreakdown, ToyUtterance,
    TrainOutcome,
};

use thiserror::Error;

use crate::tensorlet::TensorError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("{ids} phoneme ids but {scores} intensity scores")]
    LengthMismatch { ids: usize, scores: usize },
    #[error("intensity {0} outside [0, 1]")]
    IntensityOutOfRange(f64),
    #[error("phoneme id {id} out of range for vocabulary of {vocab}")]
    PhonemeOutOfRange { id: usize, vocab: usize },
    #[error("duration {duration} at position {index} must be at least 1")]
    Duration { index: usize, duration: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("bad parameter file: {0}")]
    Params(String),
    #[error("loss became non-finite at epoch {0}; lower the learning rate")]
    Diverged(usize),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
