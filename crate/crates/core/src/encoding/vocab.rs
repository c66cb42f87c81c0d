use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ingest::Corpus;
use crate::provenance::hash64;
use crate::score::{parse_chord_symbol, ChordParseError, ChordSymbol, LeadSheet};

/// Bijection between canonical chord texts and dense indices; index 0 is the
/// rest token.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabFile", into = "VocabFile")]
pub struct ChordVocab {
    chords: Vec<ChordSymbol>,
    symbols: Vec<String>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    symbols: Vec<String>,
}

impl TryFrom<VocabFile> for ChordVocab {
    type Error = String;
    fn try_from(f: VocabFile) -> Result<Self, String> {
        match f.symbols.split_first() {
            Some((first, rest)) if first == crate::score::chord::REST_TEXT => {
                ChordVocab::from_symbols(rest.iter().map(String::as_str)).map_err(|e| e.to_string())
            }
            _ => Err("vocabulary must start with the rest token".into()),
        }
    }
}

impl From<ChordVocab> for VocabFile {
    fn from(v: ChordVocab) -> Self {
        VocabFile { symbols: v.symbols }
    }
}

impl ChordVocab {
    /// Builds a vocabulary from chord texts (rest token is prepended; texts
    /// are canonicalized, deduplicated and sorted).
    pub fn from_symbols<'a>(texts: impl IntoIterator<Item = &'a str>) -> Result<Self, ChordParseError> {
        let mut set = BTreeSet::new();
        for t in texts {
            let c = parse_chord_symbol(t)?;
            if !c.is_rest() {
                set.insert(c.text().to_string());
            }
        }
        Ok(Self::from_sorted(set))
    }

    fn from_sorted(set: BTreeSet<String>) -> Self {
        let mut chords = vec![ChordSymbol::rest()];
        let mut symbols = vec![ChordSymbol::rest().text().to_string()];
        for s in set {
            chords.push(parse_chord_symbol(&s).expect("canonical text parses"));
            symbols.push(s);
        }
        let index = symbols.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
        ChordVocab { chords, symbols, index }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, idx: u32) -> &ChordSymbol {
        &self.chords[idx as usize]
    }

    pub fn index_of(&self, chord: &ChordSymbol) -> Option<u32> {
        if chord.is_rest() {
            return Some(0);
        }
        self.index.get(chord.text()).copied()
    }

    pub fn hash(&self) -> u64 {
        hash64(self.symbols.join("\n").as_bytes())
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.hash())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("vocab serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

pub fn build_vocab_from<'a>(sheets: impl IntoIterator<Item = &'a LeadSheet>) -> ChordVocab {
    let mut set = BTreeSet::new();
    for ls in sheets {
        for r in &ls.chord_regions {
            if !r.chord.is_rest() {
                set.insert(r.chord.text().to_string());
            }
        }
    }
    ChordVocab::from_sorted(set)
}

/// Rest token followed by every distinct chord text in lexicographic order.
pub fn build_vocab(corpus: &Corpus) -> ChordVocab {
    build_vocab_from(corpus.sheets())
}
