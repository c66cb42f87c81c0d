use log::{debug, info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Dropout, Params};
use super::{evaluate_loss, ModelConfig, ModelError, ModelWeights};
use crate::encoding::{build_vocab, encode, encode_lossy, ChordVocab, FrameEncoding};
use crate::ingest::Corpus;
use crate::scalar::Scalar;

/// Adaptive moment estimation over a [`Params`] tree.
pub struct Adam<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Params<T>,
    v: Params<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(like: &Params<T>, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: like.zeros_like(),
            v: like.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut Params<T>, grads: &Params<T>) {
        self.t += 1;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let c1 = T::of(1.0 - self.beta1.powi(self.t));
        let c2 = T::of(1.0 - self.beta2.powi(self.t));
        let lr = T::of(self.lr);
        let eps = T::of(self.eps);
        let one = T::one();
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for (((p, g), m), v) in tensors {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = b1 * m.data[i] + (one - b1) * gi;
                v.data[i] = b2 * v.data[i] + (one - b2) * gi * gi;
                let mh = m.data[i] / c1;
                let vh = v.data[i] / c2;
                p.data[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns
/// the norm before clipping.
pub(crate) fn clip_global_norm<T: Scalar>(grads: &mut Params<T>, max_norm: f64) -> f64 {
    let norm = grads
        .tensors()
        .iter()
        .map(|t| t.sum_squares().to_f64_lossy())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = T::of(max_norm / norm);
        for t in grads.tensors_mut() {
            t.scale(s);
        }
    }
    norm
}

/// Patience-based stopping on validation loss. An epoch improves when its
/// loss is strictly below the best so far; training stops once
/// `max(patience, 1)` consecutive epochs fail to improve.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience: patience.max(1),
            best: f64::INFINITY,
            best_epoch: 0,
            wait: 0,
        }
    }

    /// Records epoch `epoch` (1-based). Returns `true` when training should
    /// stop after this epoch.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.wait = 0;
        } else {
            self.wait += 1;
        }
        self.wait >= self.patience
    }

    pub fn improved_at(&self, epoch: usize) -> bool {
        self.best_epoch == epoch
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub valid_loss: f64,
    pub valid_accuracy: f64,
    /// Global gradient norm of the epoch's last batch, before clipping.
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub stopped_epoch: usize,
    pub best_epoch: usize,
    pub best_valid_loss: f64,
    /// Mean per-frame training loss of the initialized model.
    pub initial_train_loss: f64,
    pub vocab_size: usize,
    /// Validation frames whose chord is missing from the training
    /// vocabulary; they are scored as rest.
    pub valid_oov_frames: usize,
}

impl TrainReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn best(&self) -> Option<&EpochStats> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }
}

pub struct TrainOutcome {
    pub weights: ModelWeights<f32>,
    pub vocab: ChordVocab,
    pub report: TrainReport,
}

/// Builds the vocabulary from `train`, encodes both corpora and trains a
/// single-precision model. `cfg.chord_vocab_size` is replaced by the size of
/// the vocabulary.
pub fn train(train: &Corpus, valid: &Corpus, cfg: &ModelConfig) -> Result<TrainOutcome, ModelError> {
    if train.is_empty() {
        return Err(ModelError::EmptyCorpus("training"));
    }
    if valid.is_empty() {
        return Err(ModelError::EmptyCorpus("validation"));
    }
    let vocab = build_vocab(train);
    let train_enc = train
        .sheets()
        .map(|ls| encode(ls, &vocab))
        .collect::<Result<Vec<_>, _>>()?;
    let mut oov = 0;
    let mut valid_enc = Vec::with_capacity(valid.len());
    for (id, ls) in valid.pieces() {
        let (enc, missing) = encode_lossy(ls, &vocab)?;
        if missing > 0 {
            warn!("{id}: {missing} validation frame(s) carry chords outside the training vocabulary; scored as rest");
        }
        oov += missing;
        valid_enc.push(enc);
    }
    let cfg = ModelConfig {
        chord_vocab_size: vocab.len(),
        ..cfg.clone()
    };
    let (weights, mut report) = train_encoded::<f32>(&train_enc, &valid_enc, &cfg, vocab.hash())?;
    report.valid_oov_frames = oov;
    Ok(TrainOutcome { weights, vocab, report })
}

/// Training loop over pre-encoded pieces. Minibatches are drawn from a
/// per-epoch shuffle; each batch minimizes the mean cross-entropy over its
/// frames. Returns the weights of the best validation epoch.
pub fn train_encoded<T: Scalar>(
    train: &[FrameEncoding],
    valid: &[FrameEncoding],
    cfg: &ModelConfig,
    vocab_hash: u64,
) -> Result<(ModelWeights<T>, TrainReport), ModelError> {
    if train.is_empty() {
        return Err(ModelError::EmptyCorpus("training"));
    }
    if valid.is_empty() {
        return Err(ModelError::EmptyCorpus("validation"));
    }
    let mut weights = ModelWeights::<T>::init(cfg, vocab_hash)?;
    for enc in train.iter().chain(valid) {
        if let Some(&bad) = enc.chord.iter().find(|&&c| c as usize >= cfg.chord_vocab_size) {
            return Err(ModelError::Shape(format!(
                "chord index {bad} outside vocabulary of {}",
                cfg.chord_vocab_size
            )));
        }
    }
    let (initial_train_loss, _) = evaluate_loss(&weights, train);
    info!(
        "initial train loss {initial_train_loss:.4} (ln V = {:.4})",
        (cfg.chord_vocab_size as f64).ln()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0001);
    let mut adam = Adam::new(&weights.params, cfg.learning_rate);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = weights.params.clone();
    let mut epochs = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut stopped_epoch = cfg.max_epochs;
    let same_sets = train == valid;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut grad_norm = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let frames: usize = batch.iter().map(|&i| train[i].len()).sum();
            if frames == 0 {
                continue;
            }
            let scale = T::of(1.0 / frames as f64);
            let mut grads = weights.params.zeros_like();
            for &i in batch {
                let mut dropout = (cfg.dropout > 0.0).then_some(Dropout {
                    rate: cfg.dropout,
                    rng: &mut rng,
                });
                weights
                    .params
                    .piece_loss(&train[i], &mut dropout, Some((&mut grads, scale)));
            }
            for (name, t) in grads.named() {
                if !t.is_finite() {
                    return Err(ModelError::NonFinite {
                        tensor: format!("gradient of {name}"),
                    });
                }
            }
            grad_norm = clip_global_norm(&mut grads, cfg.grad_clip);
            adam.step(&mut weights.params, &grads);
        }
        weights.check_finite()?;
        let (train_loss, train_accuracy) = evaluate_loss(&weights, train);
        let (valid_loss, valid_accuracy) = if same_sets {
            (train_loss, train_accuracy)
        } else {
            evaluate_loss(&weights, valid)
        };
        debug!(
            "epoch {epoch}: train {train_loss:.4} acc {train_accuracy:.3}, valid {valid_loss:.4} acc {valid_accuracy:.3}"
        );
        epochs.push(EpochStats {
            epoch,
            train_loss,
            train_accuracy,
            valid_loss,
            valid_accuracy,
            grad_norm,
        });
        let stop = stopper.observe(epoch, valid_loss);
        if stopper.improved_at(epoch) {
            best.clone_from(&weights.params);
        }
        if stop {
            stopped_epoch = epoch;
            info!("early stop at epoch {epoch}; best epoch {}", stopper.best_epoch());
            break;
        }
    }
    weights.params = best;
    let report = TrainReport {
        epochs,
        stopped_epoch,
        best_epoch: stopper.best_epoch(),
        best_valid_loss: stopper.best_loss(),
        initial_train_loss,
        vocab_size: cfg.chord_vocab_size,
        valid_oov_frames: 0,
    };
    Ok((weights, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patience_one_with_rising_loss() {
        let mut s = EarlyStopping::new(1);
        assert!(!s.observe(1, 1.0));
        assert!(s.observe(2, 1.5));
        assert_eq!(s.best_epoch(), 1);
    }

    #[test]
    fn patience_counts_consecutive_misses() {
        let mut s = EarlyStopping::new(3);
        let losses = [3.0, 2.0, 2.5, 2.5, 1.9, 2.0, 2.0, 2.0, 1.0];
        let stop = losses.iter().enumerate().position(|(i, &l)| s.observe(i + 1, l));
        assert_eq!(stop, Some(7));
        assert_eq!(s.best_epoch(), 5);
    }

    #[test]
    fn zero_patience_behaves_as_one() {
        let mut s = EarlyStopping::new(0);
        assert!(!s.observe(1, 1.0));
        assert!(s.observe(2, 1.0));
    }
}
