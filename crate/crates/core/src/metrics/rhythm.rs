use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::progression::entropy;
use crate::encoding::{chord_onsets, FrameEncoding};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhythmMetrics {
    /// Distinct per-bar chord-onset patterns.
    pub hrc: usize,
    /// Entropy of the pattern histogram.
    pub hrhe: f64,
    /// Mean beat strength of chord-onset frames.
    pub cbs: Option<f64>,
    /// Onset counts by beat strength 0..=3.
    pub beat_onset_histogram: [usize; 4],
}

/// Onset bitmask of every bar. A pickup is left-padded to the length of the
/// following bar; a short final bar is right-padded to the length of the one
/// before it.
pub fn bar_patterns(chords: &[u32], enc: &FrameEncoding) -> Vec<Vec<bool>> {
    let onsets = chord_onsets(chords);
    let mut is_onset = vec![false; chords.len()];
    for t in onsets {
        is_onset[t] = true;
    }
    let bars = enc.bars();
    let mut out = Vec::with_capacity(bars.len());
    for (i, bar) in bars.iter().enumerate() {
        let bits: Vec<bool> = bar.clone().map(|t| is_onset.get(t).copied().unwrap_or(false)).collect();
        let pickup = i == 0 && enc.beat.get(bar.start) != Some(&3);
        let pattern = if pickup {
            let full = bars.get(1).map(|b| b.len()).unwrap_or(bits.len()).max(bits.len());
            let mut p = vec![false; full - bits.len()];
            p.extend(bits);
            p
        } else if i + 1 == bars.len() && i > 0 && bar.len() < bars[i - 1].len() {
            let mut p = bits;
            p.resize(bars[i - 1].len(), false);
            p
        } else {
            bits
        };
        out.push(pattern);
    }
    out
}

pub fn rhythm_metrics(chords: &[u32], enc: &FrameEncoding) -> RhythmMetrics {
    let mut hist: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    for p in bar_patterns(chords, enc) {
        *hist.entry(p).or_default() += 1;
    }
    let mut beat_onset_histogram = [0usize; 4];
    let onsets = chord_onsets(chords);
    let mut strength_sum = 0usize;
    for &t in &onsets {
        let b = enc.beat.get(t).copied().unwrap_or(0).min(3) as usize;
        beat_onset_histogram[b] += 1;
        strength_sum += b;
    }
    RhythmMetrics {
        hrc: hist.len(),
        hrhe: entropy(hist.values().copied()),
        cbs: (!onsets.is_empty()).then(|| strength_sum as f64 / onsets.len() as f64),
        beat_onset_histogram,
    }
}
