use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::score::LeadSheet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("duplicate piece id `{0}`")]
    DuplicateId(String),
    #[error("cannot split a corpus of {0} piece(s); need at least 2")]
    TooSmall(usize),
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
}

/// Named lead sheets with unique ids and optional source paths.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pieces: Vec<(String, LeadSheet)>,
    provenance: BTreeMap<String, PathBuf>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pieces(pieces: impl IntoIterator<Item = (String, LeadSheet)>) -> Result<Self, CorpusError> {
        let mut c = Corpus::new();
        for (id, ls) in pieces {
            c.push(id, ls, None)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, id: String, sheet: LeadSheet, source: Option<PathBuf>) -> Result<(), CorpusError> {
        if self.pieces.iter().any(|(existing, _)| *existing == id) {
            return Err(CorpusError::DuplicateId(id));
        }
        if let Some(p) = source {
            self.provenance.insert(id.clone(), p);
        }
        self.pieces.push((id, sheet));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[(String, LeadSheet)] {
        &self.pieces
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.pieces.iter().map(|(id, _)| id.as_str())
    }

    pub fn sheets(&self) -> impl Iterator<Item = &LeadSheet> {
        self.pieces.iter().map(|(_, ls)| ls)
    }

    pub fn get(&self, id: &str) -> Option<&LeadSheet> {
        self.pieces.iter().find(|(i, _)| i == id).map(|(_, ls)| ls)
    }

    pub fn source(&self, id: &str) -> Option<&PathBuf> {
        self.provenance.get(id)
    }

    fn subset(&self, keep: &HashSet<&str>) -> Corpus {
        Corpus {
            pieces: self
                .pieces
                .iter()
                .filter(|(id, _)| keep.contains(id.as_str()))
                .cloned()
                .collect(),
            provenance: self
                .provenance
                .iter()
                .filter(|(id, _)| keep.contains(id.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

/// Why [`corpus_filter`] drops a piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterReason {
    NoChords,
    StaticHarmony { bar: usize },
}

impl fmt::Display for FilterReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterReason::NoChords => write!(f, "no chords"),
            FilterReason::StaticHarmony { bar } => {
                write!(f, "no chord change within 4 bars (from full bar {bar})")
            }
        }
    }
}

/// Checks the corpus quality rule for one piece: it must carry a chord, and
/// every run of four consecutive full bars must contain a chord onset after
/// its first frame.
pub fn filter_reason(ls: &LeadSheet) -> Option<FilterReason> {
    if !ls.chord_regions.iter().any(|r| !r.chord.is_rest()) {
        return Some(FilterReason::NoChords);
    }
    let full: Vec<_> = ls
        .bars()
        .into_iter()
        .filter(|b| !b.pickup && b.len == b.full_len())
        .collect();
    for (i, window) in full.windows(4).enumerate() {
        let start = window[0].start;
        let end = window[3].start + window[3].len;
        if !ls.chord_regions.iter().any(|r| r.onset > start && r.onset < end) {
            return Some(FilterReason::StaticHarmony { bar: i });
        }
    }
    None
}

pub fn corpus_filter(corpus: &Corpus) -> Corpus {
    let keep: HashSet<&str> = corpus
        .pieces
        .iter()
        .filter(|(_, ls)| filter_reason(ls).is_none())
        .map(|(id, _)| id.as_str())
        .collect();
    corpus.subset(&keep)
}

/// Deterministic shuffle-then-split. The training side gets
/// `round(n * train_fraction)` pieces, clamped so both sides are non-empty.
pub fn split_corpus(corpus: &Corpus, train_fraction: f64, seed: u64) -> Result<(Corpus, Corpus), CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::BadFraction(train_fraction));
    }
    let n = corpus.len();
    if n < 2 {
        return Err(CorpusError::TooSmall(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let train_ids: HashSet<&str> = order[..n_train].iter().map(|&i| corpus.pieces[i].0.as_str()).collect();
    let valid_ids: HashSet<&str> = order[n_train..].iter().map(|&i| corpus.pieces[i].0.as_str()).collect();
    Ok((corpus.subset(&train_ids), corpus.subset(&valid_ids)))
}
