use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{loss_and_grad, ModelConfig, ModelError, ModelWeights};
use crate::encoding::FrameEncoding;

#[derive(Clone, Debug, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub analytic_norm: f64,
    pub numeric_norm: f64,
    /// `‖a − n‖ / max(‖a‖, ‖n‖, 1e-12)`.
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
    pub max_relative_error: f64,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&TensorCheck> {
        self.tensors
            .iter()
            .max_by(|a, b| a.relative_error.total_cmp(&b.relative_error))
    }
}

pub const FD_STEP: f64 = 1e-5;

/// Compares analytic gradients of the summed batch loss against central
/// finite differences for every tensor of a double-precision model built
/// from `cfg` (dropout forced off). Biases are perturbed away from their
/// initial constants so that every code path carries a gradient.
pub fn grad_check(cfg: &ModelConfig, batch: &[FrameEncoding], seed: u64) -> Result<GradCheckReport, ModelError> {
    let cfg = ModelConfig {
        dropout: 0.0,
        seed,
        ..cfg.clone()
    };
    let mut w = ModelWeights::<f64>::init(&cfg, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    for (name, t) in w.params.named_mut() {
        if name.ends_with(".b") {
            t.data.iter_mut().for_each(|v| *v += rng.random_range(-0.5..0.5));
        }
    }
    check_weights(&w, batch)
}

/// Finite-difference check of an existing model.
pub fn check_weights(w: &ModelWeights<f64>, batch: &[FrameEncoding]) -> Result<GradCheckReport, ModelError> {
    let (_, grads) = loss_and_grad(w, batch, 1.0);
    let analytic: Vec<(String, Vec<f64>)> = grads.named().into_iter().map(|(n, t)| (n, t.data.clone())).collect();
    for (name, g) in &analytic {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite {
                tensor: format!("gradient of {name}"),
            });
        }
    }
    let mut probe = w.clone();
    let mut tensors = Vec::with_capacity(analytic.len());
    for (k, (name, a)) in analytic.iter().enumerate() {
        let mut numeric = vec![0.0; a.len()];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = probe.params.tensors()[k].data[i];
            set(&mut probe, k, i, orig + FD_STEP);
            let up = batch_loss(&probe, batch);
            set(&mut probe, k, i, orig - FD_STEP);
            let down = batch_loss(&probe, batch);
            set(&mut probe, k, i, orig);
            *slot = (up - down) / (2.0 * FD_STEP);
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = a.iter().zip(&numeric).map(|(x, y)| x - y).collect();
        let (an, nn) = (norm(a), norm(&numeric));
        tensors.push(TensorCheck {
            name: name.clone(),
            analytic_norm: an,
            numeric_norm: nn,
            relative_error: norm(&diff) / an.max(nn).max(1e-12),
        });
    }
    let max_relative_error = tensors.iter().map(|t| t.relative_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        tensors,
        max_relative_error,
    })
}

fn set(w: &mut ModelWeights<f64>, tensor: usize, i: usize, v: f64) {
    w.params.tensors_mut()[tensor].data[i] = v;
}

fn batch_loss(w: &ModelWeights<f64>, batch: &[FrameEncoding]) -> f64 {
    batch
        .iter()
        .map(|enc| w.params.piece_loss(enc, &mut None, None).loss)
        .sum()
}
