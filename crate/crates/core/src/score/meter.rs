use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Frames per quarter note; one frame is a sixteenth note.
pub const FRAMES_PER_QUARTER: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeterError {
    #[error("time signature numerator must be positive")]
    ZeroNumerator,
    #[error("time signature denominator {0} is not a power of two")]
    BadDenominator(u32),
    #[error("time signature {0}/{1} does not fit the sixteenth-note grid")]
    UnsupportedResolution(u32, u32),
    #[error("key signature {0} is outside -7..=7")]
    KeyOutOfRange(i32),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTime", into = "RawTime")]
pub struct TimeSignature {
    numerator: u32,
    denominator: u32,
}

#[derive(Serialize, Deserialize)]
struct RawTime {
    numerator: u32,
    denominator: u32,
}

impl TryFrom<RawTime> for TimeSignature {
    type Error = MeterError;
    fn try_from(r: RawTime) -> Result<Self, MeterError> {
        TimeSignature::new(r.numerator, r.denominator)
    }
}

impl From<TimeSignature> for RawTime {
    fn from(t: TimeSignature) -> Self {
        RawTime {
            numerator: t.numerator,
            denominator: t.denominator,
        }
    }
}

impl TimeSignature {
    pub const COMMON: TimeSignature = TimeSignature {
        numerator: 4,
        denominator: 4,
    };

    /// Accepts any positive numerator and power-of-two denominator; grid fit
    /// is checked by [`frames_per_bar`].
    pub fn new(numerator: u32, denominator: u32) -> Result<Self, MeterError> {
        if numerator == 0 {
            return Err(MeterError::ZeroNumerator);
        }
        if denominator == 0 || !denominator.is_power_of_two() {
            return Err(MeterError::BadDenominator(denominator));
        }
        Ok(TimeSignature { numerator, denominator })
    }

    pub fn numerator(self) -> u32 {
        self.numerator
    }

    pub fn denominator(self) -> u32 {
        self.denominator
    }

    /// Compound meters group three eighths into a dotted-quarter beat.
    pub fn is_compound(self) -> bool {
        self.denominator == 8 && self.numerator.is_multiple_of(3)
    }

    pub fn frames_per_bar(self) -> Result<u32, MeterError> {
        frames_per_bar(self)
    }
}

impl fmt::Debug for TimeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl fmt::Display for TimeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// `numerator * 16 / denominator`. Denominators finer than a sixteenth are
/// rejected because their beats fall between frames.
pub fn frames_per_bar(ts: TimeSignature) -> Result<u32, MeterError> {
    if ts.denominator > 16 {
        return Err(MeterError::UnsupportedResolution(ts.numerator, ts.denominator));
    }
    Ok(ts.numerator * (16 / ts.denominator))
}

/// Key signature as a count of sharps (positive) or flats (negative).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct KeySignature(i8);

impl KeySignature {
    pub const C_MAJOR: KeySignature = KeySignature(0);

    pub fn new(fifths: i32) -> Result<Self, MeterError> {
        if !(-7..=7).contains(&fifths) {
            return Err(MeterError::KeyOutOfRange(fifths));
        }
        Ok(KeySignature(fifths as i8))
    }

    pub fn fifths(self) -> i32 {
        self.0 as i32
    }

    /// Pitch class of the major-mode tonic.
    pub fn tonic(self) -> u8 {
        (7 * self.0 as i32).rem_euclid(12) as u8
    }
}

impl TryFrom<i32> for KeySignature {
    type Error = MeterError;
    fn try_from(v: i32) -> Result<Self, MeterError> {
        KeySignature::new(v)
    }
}

impl From<KeySignature> for i32 {
    fn from(k: KeySignature) -> i32 {
        k.0 as i32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_per_bar_table() {
        let fpb = |n, d| frames_per_bar(TimeSignature::new(n, d).unwrap()).unwrap();
        assert_eq!(fpb(4, 4), 16);
        assert_eq!(fpb(3, 4), 12);
        assert_eq!(fpb(6, 8), 12);
        assert_eq!(fpb(2, 2), 16);
        assert_eq!(fpb(7, 16), 7);
    }

    #[test]
    fn thirty_second_denominator_is_unsupported() {
        let ts = TimeSignature::new(3, 32).unwrap();
        assert_eq!(frames_per_bar(ts), Err(MeterError::UnsupportedResolution(3, 32)));
        assert!(TimeSignature::new(3, 5).is_err());
        assert!(TimeSignature::new(0, 4).is_err());
    }

    #[test]
    fn key_range_and_tonic() {
        assert!(KeySignature::new(8).is_err());
        assert!(KeySignature::new(-8).is_err());
        assert_eq!(KeySignature::new(-1).unwrap().tonic(), 5);
        assert_eq!(KeySignature::new(2).unwrap().tonic(), 2);
        assert_eq!(KeySignature::new(-6).unwrap().tonic(), 6);
    }
}
