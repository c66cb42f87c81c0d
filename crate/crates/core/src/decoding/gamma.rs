use std::collections::BTreeSet;

use crate::scalar::Scalar;

use super::DecodeError;

/// Probability floor applied before exponentiation.
pub const PROB_FLOOR: f64 = 1e-12;

/// Categorical distribution over the chord vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T = f64> {
    probs: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    /// Accepts nonnegative finite probabilities summing to 1 within 1e-6
    /// (single precision) or 1e-9 (double).
    pub fn new(probs: Vec<T>) -> Result<Self, DecodeError> {
        if probs.is_empty() {
            return Err(DecodeError::InvalidDistribution("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < T::zero()) {
            return Err(DecodeError::InvalidDistribution(format!("entry {p}")));
        }
        let sum: f64 = probs.iter().map(|p| p.to_f64_lossy()).sum();
        let tol = if std::mem::size_of::<T>() <= 4 { 1e-5 } else { 1e-9 };
        if (sum - 1.0).abs() > tol {
            return Err(DecodeError::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Distribution { probs })
    }

    pub fn from_logits(logits: &[T]) -> Self {
        Distribution {
            probs: crate::scalar::softmax(logits),
        }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<T> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mass(&self, tokens: &[usize]) -> T {
        let set: BTreeSet<usize> = tokens.iter().copied().collect();
        set.into_iter().filter_map(|i| self.probs.get(i)).copied().sum()
    }
}

/// Control strength Γ in `[0, 1]`. 0.5 leaves distributions unchanged;
/// larger values suppress the attribute tokens.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct GammaControl(f64);

impl GammaControl {
    pub const NEUTRAL: GammaControl = GammaControl(0.5);

    pub fn new(gamma: f64) -> Result<Self, DecodeError> {
        if (0.0..=1.0).contains(&gamma) {
            Ok(GammaControl(gamma))
        } else {
            Err(DecodeError::GammaOutOfRange(gamma))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `tan(πΓ/2)`; infinite at Γ = 1.
    pub fn exponent(self) -> f64 {
        if self.0 == 1.0 {
            f64::INFINITY
        } else {
            (std::f64::consts::FRAC_PI_2 * self.0).tan()
        }
    }
}

/// Result of one rescaling, with the attribute masses before and after.
#[derive(Clone, Debug, PartialEq)]
pub struct Rescaled<T = f64> {
    pub dist: Distribution<T>,
    pub p_a_in: T,
    pub p_a_out: T,
}

/// Gamma rescaling: the attribute mass `p_A` becomes `p_A^tan(πΓ/2)`.
/// Attribute tokens are scaled by `p_A_out / p_A_in`, the rest by
/// `1 + (p_A_in − p_A_out) / p_rest`, so ratios inside each group are kept.
pub fn gamma_rescale<T: Scalar>(
    d: &Distribution<T>,
    attribute_tokens: &[usize],
    g: GammaControl,
) -> Result<Distribution<T>, DecodeError> {
    gamma_rescale_traced(d, attribute_tokens, g).map(|r| r.dist)
}

pub fn gamma_rescale_traced<T: Scalar>(
    d: &Distribution<T>,
    attribute_tokens: &[usize],
    g: GammaControl,
) -> Result<Rescaled<T>, DecodeError> {
    let attrs: BTreeSet<usize> = attribute_tokens.iter().copied().collect();
    if attrs.is_empty() {
        return Err(DecodeError::EmptyAttributeSet);
    }
    if let Some(&bad) = attrs.iter().find(|&&i| i >= d.len()) {
        return Err(DecodeError::TokenOutOfRange {
            token: bad,
            vocab: d.len(),
        });
    }
    let mut p_in = T::zero();
    let mut p_rest = T::zero();
    for (i, &p) in d.probs.iter().enumerate() {
        if attrs.contains(&i) {
            p_in += p;
        } else {
            p_rest += p;
        }
    }
    if p_in <= T::zero() || p_rest <= T::zero() {
        return Err(DecodeError::Degenerate {
            p_a: p_in.to_f64_lossy(),
        });
    }
    if g.value() == 0.5 {
        return Ok(Rescaled {
            dist: d.clone(),
            p_a_in: p_in,
            p_a_out: p_in,
        });
    }
    let p_out = if g.value() == 1.0 {
        T::zero()
    } else {
        p_in.max(T::of(PROB_FLOOR)).powf(T::of(g.exponent()))
    };
    let a_scale = p_out / p_in;
    let n_scale = if g.value() == 0.0 {
        T::zero()
    } else {
        T::one() + (p_in - p_out) / p_rest
    };
    let probs = d
        .probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let s = if attrs.contains(&i) { a_scale } else { n_scale };
            (p * s).max(T::zero())
        })
        .collect();
    Ok(Rescaled {
        dist: Distribution { probs },
        p_a_in: p_in,
        p_a_out: p_out,
    })
}
