//! Bi-LSTM encoder-decoder chord model with hand-written backpropagation.

mod config;
mod gradcheck;
mod io;
mod lstm;
mod network;
mod tensor;
mod train;

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use config::ModelConfig;
pub use gradcheck::{grad_check, GradCheckReport, TensorCheck};
pub use io::{load_weights, load_weights_expecting, save_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};
pub use lstm::Lstm;
pub use network::{Context, Decoder, DecoderState, EncoderBlock, Params, META_CLASSES};
pub use tensor::Tensor;
pub use train::{train, train_encoded, Adam, EarlyStopping, EpochStats, TrainOutcome, TrainReport};

use crate::encoding::FrameEncoding;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in tensor `{tensor}`")]
    NonFinite { tensor: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("weights file is not valid: {0}")]
    Format(String),
    #[error("unsupported weights format version {found} (this build reads version {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("vocabulary hash mismatch: weights were trained with {expected:016x}, got {found:016x}")]
    VocabMismatch { expected: u64, found: u64 },
    #[error("training needs a non-empty {0} corpus")]
    EmptyCorpus(&'static str),
    #[error(transparent)]
    Encode(#[from] crate::encoding::EncodeError),
}

/// Trained (or freshly initialized) model: config, the hash of the chord
/// vocabulary its output layer indexes, and all tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights<T> {
    pub config: ModelConfig,
    pub vocab_hash: u64,
    pub params: Params<T>,
}

impl<T: Scalar> ModelWeights<T> {
    /// Random initialization from `config.seed`.
    pub fn init(config: &ModelConfig, vocab_hash: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(ModelWeights {
            config: config.clone(),
            vocab_hash,
            params: Params::init(config, &mut rng),
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.params.vocab_size()
    }

    /// Checks every tensor for NaN or infinity.
    pub fn check_finite(&self) -> Result<(), ModelError> {
        for (name, t) in self.params.named() {
            if !t.is_finite() {
                return Err(ModelError::NonFinite { tensor: name });
            }
        }
        Ok(())
    }

    /// Per-frame logits, `T × vocab`. See [`Params::forward`].
    pub fn forward(
        &self,
        enc: &FrameEncoding,
        teacher: Option<&[u32]>,
        dropout_on: bool,
        seed: u64,
    ) -> Result<Vec<Vec<T>>, ModelError> {
        self.params.forward(self.config.dropout, enc, teacher, dropout_on, seed)
    }

    pub fn cast<U: Scalar>(&self) -> ModelWeights<U> {
        ModelWeights {
            config: self.config.clone(),
            vocab_hash: self.vocab_hash,
            params: self.params.cast(),
        }
    }
}

/// Free function form of [`ModelWeights::forward`].
pub fn forward<T: Scalar>(
    w: &ModelWeights<T>,
    enc: &FrameEncoding,
    teacher: Option<&[u32]>,
    dropout_on: bool,
    seed: u64,
) -> Result<Vec<Vec<T>>, ModelError> {
    w.forward(enc, teacher, dropout_on, seed)
}

/// Mean per-frame cross-entropy and frame accuracy of teacher-forced
/// predictions, dropout off.
pub fn evaluate_loss<T: Scalar>(w: &ModelWeights<T>, data: &[FrameEncoding]) -> (f64, f64) {
    let mut loss = 0.0;
    let mut correct = 0;
    let mut frames = 0;
    for enc in data {
        let r = w.params.piece_loss(enc, &mut None, None);
        loss += r.loss.to_f64_lossy();
        correct += r.correct;
        frames += r.frames;
    }
    if frames == 0 {
        return (0.0, 0.0);
    }
    (loss / frames as f64, correct as f64 / frames as f64)
}

/// Gradient of the summed per-frame cross-entropy over `batch`, multiplied
/// by `loss_scale`. Dropout off. Returns `(loss · loss_scale, gradients)`.
pub fn loss_and_grad<T: Scalar>(w: &ModelWeights<T>, batch: &[FrameEncoding], loss_scale: T) -> (T, Params<T>) {
    let mut grads = w.params.zeros_like();
    let mut loss = T::zero();
    for enc in batch {
        let r = w.params.piece_loss(enc, &mut None, Some((&mut grads, loss_scale)));
        loss += r.loss * loss_scale;
    }
    (loss, grads)
}
