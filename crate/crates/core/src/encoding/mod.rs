//! Frame-level encoding of lead sheets.
//!
//! A piece becomes four aligned integer sequences, one entry per sixteenth
//! note: melody (0 = rest, else MIDI pitch), beat strength (0..=3), key
//! (signed fifths) and chord (vocabulary index, 0 = rest).

mod vocab;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use vocab::{build_vocab, build_vocab_from, ChordVocab};

use crate::score::{ChordRegion, ChordSymbol, LeadSheet, TimeSignature};

pub const MELODY_CLASSES: usize = 128;
pub const BEAT_CLASSES: usize = 4;
pub const KEY_CLASSES: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("chord `{0}` is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("lead sheet has no time signature at frame {0}")]
    MissingMeter(u32),
    #[error("lead sheet has no key signature at frame {0}")]
    MissingKey(u32),
}

/// Metrical weight of a frame: 3 on the downbeat, 2 on the midpoint beat of
/// meters with an even beat count, 1 on other beats, 0 between beats.
/// Compound meters (`n/8`, `n` divisible by 3) beat in dotted quarters.
pub fn beat_strength(ts: TimeSignature, frame_in_bar: u32) -> u8 {
    let (unit, beats) = if ts.is_compound() {
        (6, ts.numerator() / 3)
    } else {
        (16 / ts.denominator().min(16), ts.numerator())
    };
    if !frame_in_bar.is_multiple_of(unit) {
        return 0;
    }
    let beat = frame_in_bar / unit;
    if beat == 0 {
        3
    } else if beats % 2 == 0 && beat == beats / 2 {
        2
    } else {
        1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameEncoding {
    pub melody: Vec<u8>,
    pub beat: Vec<u8>,
    pub key: Vec<i8>,
    pub chord: Vec<u32>,
    /// Hex hash of the vocabulary the chord indices refer to.
    pub vocab_hash: String,
}

impl FrameEncoding {
    pub fn len(&self) -> usize {
        self.melody.len()
    }

    pub fn is_empty(&self) -> bool {
        self.melody.is_empty()
    }

    /// Bar segments recovered from the beat track: a new bar starts at every
    /// strength-3 frame; frames before the first one form the pickup.
    pub fn bars(&self) -> Vec<Range<usize>> {
        let mut starts: Vec<usize> = self
            .beat
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 3)
            .map(|(i, _)| i)
            .collect();
        if starts.first() != Some(&0) && !self.beat.is_empty() {
            starts.insert(0, 0);
        }
        let mut out = Vec::with_capacity(starts.len());
        for (i, &s) in starts.iter().enumerate() {
            let e = starts.get(i + 1).copied().unwrap_or(self.beat.len());
            out.push(s..e);
        }
        out
    }

    /// Copy with a different chord track, keeping the conditioning inputs.
    pub fn with_chords(&self, chord: Vec<u32>) -> FrameEncoding {
        assert_eq!(chord.len(), self.len(), "chord track length mismatch");
        FrameEncoding { chord, ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("encoding serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

fn encode_impl(ls: &LeadSheet, vocab: &ChordVocab, lossy: bool) -> Result<(FrameEncoding, usize), EncodeError> {
    let n = ls.total_frames as usize;
    let melody: Vec<u8> = ls.melody_frames().into_iter().map(|p| p.unwrap_or(0)).collect();

    let mut beat = vec![0u8; n];
    for bar in ls.bars() {
        for f in bar.start..bar.start + bar.len {
            beat[f as usize] = beat_strength(bar.time, bar.frame_in_bar(f));
        }
    }
    if ls.time_regions.first().map(|r| r.onset) != Some(0) {
        return Err(EncodeError::MissingMeter(0));
    }

    let mut key = vec![0i8; n];
    for (f, k) in key.iter_mut().enumerate() {
        *k = ls.key_at(f as u32).ok_or(EncodeError::MissingKey(f as u32))?.fifths() as i8;
    }

    let mut chord = vec![0u32; n];
    let mut oov_frames = 0usize;
    for (i, region) in ls.chord_regions.iter().enumerate() {
        let start = region.onset as usize;
        let end = ls
            .chord_regions
            .get(i + 1)
            .map(|r| r.onset as usize)
            .unwrap_or(n)
            .min(n);
        let idx = match vocab.index_of(&region.chord) {
            Some(idx) => idx,
            None if lossy => {
                oov_frames += end.saturating_sub(start);
                0
            }
            None => return Err(EncodeError::OutOfVocabulary(region.chord.text().to_string())),
        };
        for c in chord.iter_mut().take(end).skip(start) {
            *c = idx;
        }
    }

    Ok((
        FrameEncoding {
            melody,
            beat,
            key,
            chord,
            vocab_hash: vocab.hash_hex(),
        },
        oov_frames,
    ))
}

pub fn encode(ls: &LeadSheet, vocab: &ChordVocab) -> Result<FrameEncoding, EncodeError> {
    encode_impl(ls, vocab, false).map(|(e, _)| e)
}

/// Like [`encode`], but out-of-vocabulary chords become rest frames; the
/// second value counts the affected frames.
pub fn encode_lossy(ls: &LeadSheet, vocab: &ChordVocab) -> Result<(FrameEncoding, usize), EncodeError> {
    encode_impl(ls, vocab, true)
}

/// Run-length collapse of a chord track into regions. Leading rest frames
/// produce nothing; a rest run after a chord produces a `N.C.` region.
pub fn decode_chords(chord_frames: &[u32], vocab: &ChordVocab) -> Vec<ChordRegion> {
    let mut out: Vec<ChordRegion> = Vec::new();
    let mut prev: Option<u32> = None;
    for (t, &idx) in chord_frames.iter().enumerate() {
        if prev == Some(idx) {
            continue;
        }
        prev = Some(idx);
        if idx == 0 && out.is_empty() {
            continue;
        }
        let chord = if idx == 0 {
            ChordSymbol::rest()
        } else {
            vocab.symbol(idx).clone()
        };
        out.push(ChordRegion { onset: t as u32, chord });
    }
    out
}

/// Frames where a new non-rest chord starts.
pub fn chord_onsets(chord_frames: &[u32]) -> Vec<usize> {
    (0..chord_frames.len())
        .filter(|&t| chord_frames[t] != 0 && (t == 0 || chord_frames[t] != chord_frames[t - 1]))
        .collect()
}
