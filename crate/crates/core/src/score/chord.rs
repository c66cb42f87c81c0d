//! Chord symbols and pitch-class sets.
//!
//! Grammar accepted by [`parse_chord_symbol`]:
//!
//! ```text
//! symbol  := "N.C." | root quality [ "/" root ]
//! root    := [A-G] ( "#" | "b" )?
//! quality := "" | "m" | "dim" | "aug" | "sus2" | "sus4" | "6" | "m6" | "7"
//!          | "maj7" | "m7" | "m7b5" | "dim7" | "9" | "maj9" | "m9" | "add9"
//!          | "7sus4" | "mMaj7" | "aug7" | "11" | "13"
//! ```
//!
//! A few common aliases are accepted on input (`min`, `-`, `M7`, `o`, `+`,
//! `sus`, `ø`, ...) and rewritten to the canonical suffix. Root and bass
//! spellings are kept as written; pitch arithmetic is mod 12.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const REST_TEXT: &str = "N.C.";

/// Twelve-bit pitch-class mask, bit `k` set when pitch class `k` (C = 0) is present.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct PitchClassSet(u16);

impl PitchClassSet {
    pub const EMPTY: PitchClassSet = PitchClassSet(0);

    pub fn from_mask(mask: u16) -> Self {
        PitchClassSet(mask & 0x0fff)
    }

    pub fn from_classes<I: IntoIterator<Item = u8>>(classes: I) -> Self {
        let mut mask = 0u16;
        for pc in classes {
            mask |= 1 << (pc % 12);
        }
        PitchClassSet(mask)
    }

    pub fn mask(self) -> u16 {
        self.0
    }

    pub fn contains(self, pc: u8) -> bool {
        self.0 & (1 << (pc % 12)) != 0
    }

    pub fn insert(&mut self, pc: u8) {
        self.0 |= 1 << (pc % 12);
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = u8> {
        (0u8..12).filter(move |&pc| self.contains(pc))
    }

    /// Rotates every member up by `semitones` (mod 12).
    pub fn transpose(self, semitones: i32) -> Self {
        PitchClassSet::from_classes(self.iter().map(|pc| (pc as i32 + semitones).rem_euclid(12) as u8))
    }

    /// Binary indicator vector over pitch classes.
    pub fn indicator(self) -> [f64; 12] {
        let mut v = [0.0; 12];
        for pc in self.iter() {
            v[pc as usize] = 1.0;
        }
        v
    }
}

impl fmt::Debug for PitchClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Chord kinds understood by the parser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChordQuality {
    NoChord,
    Major,
    Minor,
    Diminished,
    Augmented,
    Sus2,
    Sus4,
    Major6,
    Minor6,
    Dominant7,
    Major7,
    Minor7,
    HalfDiminished7,
    Diminished7,
    Dominant9,
    Major9,
    Minor9,
    Add9,
    Dominant7Sus4,
    MinorMajor7,
    Augmented7,
    Dominant11,
    Dominant13,
}

impl ChordQuality {
    pub const ALL: [ChordQuality; 22] = [
        ChordQuality::Major,
        ChordQuality::Minor,
        ChordQuality::Diminished,
        ChordQuality::Augmented,
        ChordQuality::Sus2,
        ChordQuality::Sus4,
        ChordQuality::Major6,
        ChordQuality::Minor6,
        ChordQuality::Dominant7,
        ChordQuality::Major7,
        ChordQuality::Minor7,
        ChordQuality::HalfDiminished7,
        ChordQuality::Diminished7,
        ChordQuality::Dominant9,
        ChordQuality::Major9,
        ChordQuality::Minor9,
        ChordQuality::Add9,
        ChordQuality::Dominant7Sus4,
        ChordQuality::MinorMajor7,
        ChordQuality::Augmented7,
        ChordQuality::Dominant11,
        ChordQuality::Dominant13,
    ];

    /// Canonical suffix written after the root.
    pub fn suffix(self) -> &'static str {
        use ChordQuality::*;
        match self {
            NoChord => "",
            Major => "",
            Minor => "m",
            Diminished => "dim",
            Augmented => "aug",
            Sus2 => "sus2",
            Sus4 => "sus4",
            Major6 => "6",
            Minor6 => "m6",
            Dominant7 => "7",
            Major7 => "maj7",
            Minor7 => "m7",
            HalfDiminished7 => "m7b5",
            Diminished7 => "dim7",
            Dominant9 => "9",
            Major9 => "maj9",
            Minor9 => "m9",
            Add9 => "add9",
            Dominant7Sus4 => "7sus4",
            MinorMajor7 => "mMaj7",
            Augmented7 => "aug7",
            Dominant11 => "11",
            Dominant13 => "13",
        }
    }

    /// Semitone offsets above the root.
    pub fn intervals(self) -> &'static [u8] {
        use ChordQuality::*;
        match self {
            NoChord => &[],
            Major => &[0, 4, 7],
            Minor => &[0, 3, 7],
            Diminished => &[0, 3, 6],
            Augmented => &[0, 4, 8],
            Sus2 => &[0, 2, 7],
            Sus4 => &[0, 5, 7],
            Major6 => &[0, 4, 7, 9],
            Minor6 => &[0, 3, 7, 9],
            Dominant7 => &[0, 4, 7, 10],
            Major7 => &[0, 4, 7, 11],
            Minor7 => &[0, 3, 7, 10],
            HalfDiminished7 => &[0, 3, 6, 10],
            Diminished7 => &[0, 3, 6, 9],
            Dominant9 => &[0, 4, 7, 10, 2],
            Major9 => &[0, 4, 7, 11, 2],
            Minor9 => &[0, 3, 7, 10, 2],
            Add9 => &[0, 4, 7, 2],
            Dominant7Sus4 => &[0, 5, 7, 10],
            MinorMajor7 => &[0, 3, 7, 11],
            Augmented7 => &[0, 4, 8, 10],
            Dominant11 => &[0, 4, 7, 10, 2, 5],
            Dominant13 => &[0, 4, 7, 10, 2, 9],
        }
    }

    fn from_suffix(s: &str) -> Option<ChordQuality> {
        use ChordQuality::*;
        let q = match s {
            "" | "maj" | "M" => Major,
            "m" | "min" | "-" => Minor,
            "dim" | "o" | "°" => Diminished,
            "aug" | "+" => Augmented,
            "sus2" => Sus2,
            "sus4" | "sus" => Sus4,
            "6" | "maj6" => Major6,
            "m6" | "min6" | "-6" => Minor6,
            "7" | "dom7" => Dominant7,
            "maj7" | "M7" | "Δ" | "Δ7" => Major7,
            "m7" | "min7" | "-7" => Minor7,
            "m7b5" | "ø" | "ø7" | "min7b5" | "-7b5" => HalfDiminished7,
            "dim7" | "o7" | "°7" => Diminished7,
            "9" => Dominant9,
            "maj9" | "M9" => Major9,
            "m9" | "min9" | "-9" => Minor9,
            "add9" | "add2" => Add9,
            "7sus4" | "7sus" => Dominant7Sus4,
            "mMaj7" | "mM7" | "minMaj7" | "m(maj7)" => MinorMajor7,
            "aug7" | "+7" | "7#5" => Augmented7,
            "11" => Dominant11,
            "13" => Dominant13,
            _ => return None,
        };
        Some(q)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChordParseError {
    #[error("empty chord symbol")]
    Empty,
    #[error("malformed root `{0}`")]
    MalformedRoot(String),
    #[error("unknown chord quality `{0}`")]
    UnknownQuality(String),
    #[error("malformed bass note `{0}`")]
    MalformedBass(String),
}

/// A parsed chord symbol. Equality compares the canonical text and all
/// derived fields, so `parse(c.text()) == c` is the round-trip contract.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChordSymbol {
    text: String,
    root: Option<u8>,
    quality: ChordQuality,
    bass: Option<u8>,
    pitch_classes: PitchClassSet,
}

impl ChordSymbol {
    pub fn rest() -> Self {
        ChordSymbol {
            text: REST_TEXT.to_string(),
            root: None,
            quality: ChordQuality::NoChord,
            bass: None,
            pitch_classes: PitchClassSet::EMPTY,
        }
    }

    /// Builds a chord from pitch classes, spelling the root with the default
    /// sharps/flats table.
    pub fn from_parts(root: u8, quality: ChordQuality, bass: Option<u8>) -> Self {
        let root = root % 12;
        let mut text = format!("{}{}", default_spelling(root), quality.suffix());
        if let Some(b) = bass {
            text.push('/');
            text.push_str(default_spelling(b % 12));
        }
        Self::assemble(text, root, quality, bass.map(|b| b % 12))
    }

    fn assemble(text: String, root: u8, quality: ChordQuality, bass: Option<u8>) -> Self {
        let mut pcs = PitchClassSet::from_classes(quality.intervals().iter().map(|&i| root + i));
        if let Some(b) = bass {
            pcs.insert(b);
        }
        ChordSymbol {
            text,
            root: Some(root),
            quality,
            bass,
            pitch_classes: pcs,
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn root(&self) -> Option<u8> {
        self.root
    }

    pub fn quality(&self) -> ChordQuality {
        self.quality
    }

    pub fn bass(&self) -> Option<u8> {
        self.bass
    }

    pub fn pitch_classes(&self) -> PitchClassSet {
        self.pitch_classes
    }

    pub fn is_rest(&self) -> bool {
        self.root.is_none()
    }

    /// Transposes by `semitones`, respelling the root with the default table.
    pub fn transpose(&self, semitones: i32) -> ChordSymbol {
        match self.root {
            None => self.clone(),
            Some(r) => {
                let shift = |pc: u8| (pc as i32 + semitones).rem_euclid(12) as u8;
                ChordSymbol::from_parts(shift(r), self.quality, self.bass.map(shift))
            }
        }
    }
}

impl fmt::Debug for ChordSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChordSymbol({})", self.text)
    }
}

impl fmt::Display for ChordSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl FromStr for ChordSymbol {
    type Err = ChordParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_chord_symbol(s)
    }
}

impl Serialize for ChordSymbol {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for ChordSymbol {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_chord_symbol(&s).map_err(serde::de::Error::custom)
    }
}

const SPELLING: [&str; 12] = ["C", "Db", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B"];

pub fn default_spelling(pc: u8) -> &'static str {
    SPELLING[(pc % 12) as usize]
}

/// Parses a note name prefix (`C`, `F#`, `Bb`), returning its pitch class
/// and the number of bytes consumed.
pub fn parse_note_name(s: &str) -> Option<(u8, usize)> {
    let mut chars = s.chars();
    let step = chars.next()?;
    let base: i32 = match step {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return None,
    };
    let (alter, used) = match chars.next() {
        Some(c @ ('#' | '♯')) => (1, 1 + c.len_utf8()),
        Some(c @ ('b' | '♭')) => (-1, 1 + c.len_utf8()),
        _ => (0, 1),
    };
    Some(((base + alter).rem_euclid(12) as u8, used))
}

pub fn parse_chord_symbol(text: &str) -> Result<ChordSymbol, ChordParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ChordParseError::Empty);
    }
    if matches!(text, "N.C." | "NC" | "N.C") {
        return Ok(ChordSymbol::rest());
    }
    let (root, used) = parse_note_name(text).ok_or_else(|| {
        let end = text.char_indices().nth(2).map(|(i, _)| i).unwrap_or(text.len());
        ChordParseError::MalformedRoot(text[..end].to_string())
    })?;
    let root_spelled = &text[..used];
    let rest = &text[used..];
    let (suffix, bass_text) = match rest.split_once('/') {
        Some((q, b)) => (q, Some(b)),
        None => (rest, None),
    };
    let quality =
        ChordQuality::from_suffix(suffix).ok_or_else(|| ChordParseError::UnknownQuality(suffix.to_string()))?;
    let bass = match bass_text {
        None => None,
        Some(b) => match parse_note_name(b) {
            Some((pc, n)) if n == b.len() => Some((pc, b)),
            _ => return Err(ChordParseError::MalformedBass(b.to_string())),
        },
    };
    let mut canonical = format!("{}{}", root_spelled, quality.suffix());
    if let Some((_, spelled)) = bass {
        canonical.push('/');
        canonical.push_str(spelled);
    }
    Ok(ChordSymbol::assemble(canonical, root, quality, bass.map(|(pc, _)| pc)))
}

/// Binary pitch-class profile; the rest chord maps to all zeros.
pub fn chord_to_pcp(chord: &ChordSymbol) -> [f64; 12] {
    chord.pitch_classes.indicator()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcs(c: &str) -> Vec<u8> {
        parse_chord_symbol(c).unwrap().pitch_classes().iter().collect()
    }

    #[test]
    fn major_and_minor_seventh() {
        let c = parse_chord_symbol("C").unwrap();
        assert_eq!(c.root(), Some(0));
        assert_eq!(pcs("C"), vec![0, 4, 7]);
        let d = parse_chord_symbol("Dm7").unwrap();
        assert_eq!(d.root(), Some(2));
        assert_eq!(pcs("Dm7"), vec![0, 2, 5, 9]);
    }

    #[test]
    fn no_chord_is_rest() {
        let r = parse_chord_symbol("N.C.").unwrap();
        assert!(r.is_rest());
        assert!(r.pitch_classes().is_empty());
        assert_eq!(chord_to_pcp(&r), [0.0; 12]);
    }

    #[test]
    fn pcp_indicators() {
        let c = parse_chord_symbol("C").unwrap();
        assert_eq!(chord_to_pcp(&c), [1., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0.]);
        let bb = chord_to_pcp(&parse_chord_symbol("Bb").unwrap());
        for (i, v) in bb.iter().enumerate() {
            assert_eq!(*v, if [10, 2, 5].contains(&i) { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn spelling_is_preserved() {
        assert_eq!(parse_chord_symbol("A#m").unwrap().text(), "A#m");
        assert_eq!(parse_chord_symbol("Bbm").unwrap().text(), "Bbm");
        assert_eq!(
            parse_chord_symbol("A#m").unwrap().pitch_classes(),
            parse_chord_symbol("Bbm").unwrap().pitch_classes()
        );
    }

    #[test]
    fn aliases_canonicalize() {
        assert_eq!(parse_chord_symbol("Cmin7").unwrap().text(), "Cm7");
        assert_eq!(parse_chord_symbol("GM7").unwrap().text(), "Gmaj7");
        assert_eq!(parse_chord_symbol("Bø").unwrap().text(), "Bm7b5");
        assert_eq!(parse_chord_symbol("Esus").unwrap().text(), "Esus4");
    }

    #[test]
    fn slash_bass_adds_pitch_class() {
        let c = parse_chord_symbol("C/Bb").unwrap();
        assert_eq!(c.bass(), Some(10));
        assert_eq!(pcs("C/Bb"), vec![0, 4, 7, 10]);
        assert_eq!(c.text(), "C/Bb");
    }

    #[test]
    fn errors_name_offending_text() {
        assert_eq!(
            parse_chord_symbol("Cxyz"),
            Err(ChordParseError::UnknownQuality("xyz".into()))
        );
        assert_eq!(
            parse_chord_symbol("H7"),
            Err(ChordParseError::MalformedRoot("H7".into()))
        );
        assert_eq!(
            parse_chord_symbol("C/Q"),
            Err(ChordParseError::MalformedBass("Q".into()))
        );
        assert_eq!(parse_chord_symbol("  "), Err(ChordParseError::Empty));
    }

    #[test]
    fn every_quality_round_trips_for_every_root() {
        for q in ChordQuality::ALL {
            for root in 0..12 {
                let c = ChordSymbol::from_parts(root, q, None);
                assert_eq!(parse_chord_symbol(c.text()).unwrap(), c);
                assert!(c.pitch_classes().contains(root));
                assert_eq!(
                    chord_to_pcp(&c).iter().filter(|&&v| v == 1.0).count(),
                    c.pitch_classes().len()
                );
            }
        }
    }

    #[test]
    fn transposition_rotates_pcp() {
        let c = parse_chord_symbol("Dm7/C").unwrap();
        for k in -13..14 {
            let t = c.transpose(k);
            let a = chord_to_pcp(&c);
            let b = chord_to_pcp(&t);
            for i in 0..12 {
                assert_eq!(b[(i as i32 + k).rem_euclid(12) as usize], a[i]);
            }
        }
    }
}
