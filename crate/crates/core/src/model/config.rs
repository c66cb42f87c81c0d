use serde::{Deserialize, Serialize};

use super::ModelError;

/// Hyperparameters of the encoder-decoder and its training loop.
///
/// [`ModelConfig::default`] is a desk-scale setting; [`ModelConfig::paper_scale`]
/// gives the full-size layout (256-unit Bi-LSTMs, 128-unit projections,
/// batch 512).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Units per direction in each encoder Bi-LSTM.
    pub encoder_hidden: usize,
    /// Width of the per-frame projection after each Bi-LSTM.
    pub projection: usize,
    pub encoder_blocks: usize,
    pub decoder_layers: usize,
    pub decoder_hidden: usize,
    pub chord_vocab_size: usize,
    pub prev_chord_embedding: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub seed: u64,
    /// Global gradient-norm clip threshold.
    pub grad_clip: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            encoder_hidden: 64,
            projection: 64,
            encoder_blocks: 2,
            decoder_layers: 3,
            decoder_hidden: 64,
            chord_vocab_size: 2,
            prev_chord_embedding: 64,
            dropout: 0.2,
            batch_size: 8,
            patience: 20,
            learning_rate: 1e-3,
            max_epochs: 200,
            seed: 0,
            grad_clip: 5.0,
        }
    }
}

impl ModelConfig {
    pub fn paper_scale(chord_vocab_size: usize) -> Self {
        ModelConfig {
            encoder_hidden: 256,
            projection: 128,
            decoder_hidden: 256,
            chord_vocab_size,
            batch_size: 512,
            ..Default::default()
        }
    }

    /// Small layout for gradient checks and unit tests.
    pub fn tiny(chord_vocab_size: usize) -> Self {
        ModelConfig {
            encoder_hidden: 3,
            projection: 3,
            encoder_blocks: 2,
            decoder_layers: 3,
            decoder_hidden: 4,
            chord_vocab_size,
            prev_chord_embedding: 3,
            dropout: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let counts = [
            ("encoder_hidden", self.encoder_hidden),
            ("projection", self.projection),
            ("encoder_blocks", self.encoder_blocks),
            ("decoder_layers", self.decoder_layers),
            ("decoder_hidden", self.decoder_hidden),
            ("chord_vocab_size", self.chord_vocab_size),
            ("prev_chord_embedding", self.prev_chord_embedding),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(ModelError::Config(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::Config("learning_rate must be positive".into()));
        }
        if !(self.grad_clip > 0.0 && self.grad_clip.is_finite()) {
            return Err(ModelError::Config("grad_clip must be positive and finite".into()));
        }
        Ok(())
    }
}
