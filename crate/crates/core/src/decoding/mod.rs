//! Autoregressive chord generation with gamma-controlled harmonic density.
//!
//! At every frame the previously emitted chord is the attribute token.
//! Raising Γ above 0.5 lowers the probability of repeating it, so chords
//! change more often; lowering Γ holds chords longer.

mod gamma;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gamma::{gamma_rescale, gamma_rescale_traced, Distribution, GammaControl, Rescaled, PROB_FLOOR};

use crate::encoding::{chord_onsets, decode_chords, encode_lossy, ChordVocab, EncodeError, FrameEncoding};
use crate::model::{ModelError, ModelWeights};
use crate::scalar::{argmax, Scalar};
use crate::score::LeadSheet;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("gamma {0} outside [0, 1]")]
    GammaOutOfRange(f64),
    #[error("attribute mass {p_a} leaves nothing to rescale")]
    Degenerate { p_a: f64 },
    #[error("attribute set is empty")]
    EmptyAttributeSet,
    #[error("token {token} outside vocabulary of {vocab}")]
    TokenOutOfRange { token: usize, vocab: usize },
    #[error("not a probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("temperature must be positive and finite, got {0}")]
    BadTemperature(f64),
    #[error("encoding uses vocabulary {found}, weights expect {expected:016x}")]
    VocabMismatch { expected: u64, found: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// How a token is chosen from the rescaled distribution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    /// Most probable token; ties go to the lowest index.
    #[default]
    Greedy,
    /// Draw from the distribution after dividing logits by `temperature`.
    Sample { temperature: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub p_a_in: f64,
    pub p_a_out: f64,
    pub token: u32,
    /// Rescaling was skipped because the attribute mass was 0 or 1.
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generation {
    pub chords: Vec<u32>,
    pub trace: Vec<TraceStep>,
    /// Steps whose distribution was degenerate and left unscaled.
    pub skipped_steps: usize,
}

/// Decodes one chord per frame of `enc`, feeding back each choice.
pub fn generate<T: Scalar>(
    w: &ModelWeights<T>,
    enc: &FrameEncoding,
    g: GammaControl,
    strategy: Strategy,
) -> Result<Generation, DecodeError> {
    let expected = format!("{:016x}", w.vocab_hash);
    if !enc.vocab_hash.is_empty() && enc.vocab_hash != expected {
        return Err(DecodeError::VocabMismatch {
            expected: w.vocab_hash,
            found: enc.vocab_hash.clone(),
        });
    }
    if let Strategy::Sample { temperature, .. } = strategy {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(DecodeError::BadTemperature(temperature));
        }
    }
    let n = enc.len();
    if n == 0 {
        return Ok(Generation {
            chords: Vec::new(),
            trace: Vec::new(),
            skipped_steps: 0,
        });
    }
    if enc.beat.len() != n || enc.key.len() != n {
        return Err(ModelError::Shape(format!(
            "encoding tracks differ in length: melody {n}, beat {}, key {}",
            enc.beat.len(),
            enc.key.len()
        ))
        .into());
    }
    let params = &w.params;
    let ctx = params.context(enc);
    let mut state = params.initial_state();
    let mut rng = match strategy {
        Strategy::Sample { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Strategy::Greedy => None,
    };
    let mut prev = 0u32;
    let mut chords = Vec::with_capacity(n);
    let mut trace = Vec::with_capacity(n);
    let mut skipped_steps = 0;
    for step in 0..n {
        let logits = params.decode_step(&ctx, prev, &mut state);
        let mut z: Vec<f64> = logits.iter().map(|v| v.to_f64_lossy()).collect();
        if let Strategy::Sample { temperature, .. } = strategy {
            z.iter_mut().for_each(|v| *v /= temperature);
        }
        let dist = Distribution::from_logits(&z);
        let (dist, p_a_in, p_a_out, skipped) = match gamma_rescale_traced(&dist, &[prev as usize], g) {
            Ok(r) => (r.dist, r.p_a_in, r.p_a_out, false),
            Err(DecodeError::Degenerate { p_a }) => {
                skipped_steps += 1;
                debug!("step {step}: attribute mass {p_a}; rescaling skipped");
                (dist, p_a, p_a, true)
            }
            Err(e) => return Err(e),
        };
        let token = match rng.as_mut() {
            None => argmax(dist.probs()),
            Some(r) => sample(dist.probs(), r),
        } as u32;
        trace.push(TraceStep {
            step,
            p_a_in,
            p_a_out,
            token,
            skipped,
        });
        chords.push(token);
        prev = token;
    }
    Ok(Generation {
        chords,
        trace,
        skipped_steps,
    })
}

fn sample(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Harmonizes a lead sheet: its melody, meter and key drive the model, its
/// chords are ignored. The result copies the input with the generated chord
/// regions.
pub fn harmonize_sheet<T: Scalar>(
    w: &ModelWeights<T>,
    vocab: &ChordVocab,
    sheet: &LeadSheet,
    g: GammaControl,
    strategy: Strategy,
) -> Result<(LeadSheet, Generation), DecodeError> {
    if vocab.hash() != w.vocab_hash {
        return Err(DecodeError::VocabMismatch {
            expected: w.vocab_hash,
            found: vocab.hash_hex(),
        });
    }
    let (enc, _) = encode_lossy(sheet, vocab)?;
    let generation = generate(w, &enc, g, strategy)?;
    let mut out = sheet.clone();
    out.chord_regions = decode_chords(&generation.chords, vocab);
    out.provenance = None;
    Ok((out, generation))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub onsets: usize,
    /// Bar segments of the encoding, a pickup counting as one.
    pub bars: usize,
    pub onsets_per_bar: f64,
    /// Onset counts indexed by beat strength 0..=3.
    pub onset_beat_histogram: [usize; 4],
}

/// Chord-onset rate and the beat strengths onsets fall on. Onsets are the
/// starts of non-rest chord runs.
pub fn density_report(chords: &[u32], enc: &FrameEncoding) -> DensityReport {
    let onsets = chord_onsets(chords);
    let mut hist = [0usize; 4];
    for &t in &onsets {
        if let Some(&b) = enc.beat.get(t) {
            hist[(b as usize).min(3)] += 1;
        }
    }
    let bars = enc.bars().len();
    DensityReport {
        onsets: onsets.len(),
        bars,
        onsets_per_bar: if bars == 0 {
            0.0
        } else {
            onsets.len() as f64 / bars as f64
        },
        onset_beat_histogram: hist,
    }
}
