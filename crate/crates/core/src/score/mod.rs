//! Lead sheets, chord symbols and meter.

pub mod chord;
pub mod leadsheet;
pub mod meter;

pub use chord::{chord_to_pcp, parse_chord_symbol, ChordParseError, ChordQuality, ChordSymbol, PitchClassSet};
pub use leadsheet::{validate_leadsheet, Bar, ChordRegion, KeyRegion, LeadSheet, MelodyEvent, TimeRegion, Violation};
pub use meter::{frames_per_bar, KeySignature, MeterError, TimeSignature};
