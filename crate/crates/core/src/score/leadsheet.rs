use std::fmt;

use serde::{Deserialize, Serialize};

use super::chord::ChordSymbol;
use super::meter::{frames_per_bar, KeySignature, TimeSignature};
use crate::provenance::Provenance;

/// One melody event; `pitch` is a MIDI number in 1..=127 or `None` for a rest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MelodyEvent {
    pub onset: u32,
    pub duration: u32,
    pub pitch: Option<u8>,
}

impl MelodyEvent {
    pub fn end(&self) -> u32 {
        self.onset + self.duration
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChordRegion {
    pub onset: u32,
    pub chord: ChordSymbol,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRegion {
    pub onset: u32,
    pub time: TimeSignature,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyRegion {
    pub onset: u32,
    pub key: KeySignature,
}

/// A monophonic melody with chord symbols on a sixteenth-note frame grid.
///
/// Chord regions may start after frame 0; frames before the first region
/// carry no chord. A `N.C.` region marks silence after a sounding chord.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeadSheet {
    pub title: String,
    pub melody: Vec<MelodyEvent>,
    pub chord_regions: Vec<ChordRegion>,
    pub time_regions: Vec<TimeRegion>,
    pub key_regions: Vec<KeyRegion>,
    pub total_frames: u32,
    pub pickup_frames: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// A bar on the frame grid. The pickup bar is partial and aligned to the
/// end of a notional full bar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bar {
    pub start: u32,
    pub len: u32,
    pub time: TimeSignature,
    pub pickup: bool,
}

impl Bar {
    pub fn full_len(&self) -> u32 {
        frames_per_bar(self.time).unwrap_or(self.len)
    }

    /// Position of `frame` within a full bar of this meter.
    pub fn frame_in_bar(&self, frame: u32) -> u32 {
        if self.pickup {
            self.full_len() - self.len + (frame - self.start)
        } else {
            frame - self.start
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptyPiece,
    MelodyGap { frame: u32 },
    MelodyOverlap { frame: u32 },
    MelodyOverrun { frame: u32 },
    MelodyShortfall { frame: u32 },
    ZeroDuration { frame: u32 },
    InvalidPitch { frame: u32, pitch: u8 },
    MissingRegions { kind: &'static str },
    FirstRegionNotAtZero { kind: &'static str, frame: u32 },
    UnsortedRegions { kind: &'static str, frame: u32 },
    RegionOutOfRange { kind: &'static str, frame: u32 },
    DuplicateChordRegion { frame: u32 },
    LeadingRestChord { frame: u32 },
    UnsupportedMeter { frame: u32 },
    PickupTooLong { frame: u32 },
    TimeChangeOffBarline { frame: u32 },
    IncompleteFinalBar { frame: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            EmptyPiece => write!(f, "empty-piece"),
            MelodyGap { frame } => write!(f, "gap-at-frame-{frame}"),
            MelodyOverlap { frame } => write!(f, "overlap-at-frame-{frame}"),
            MelodyOverrun { frame } => write!(f, "melody-overrun-at-frame-{frame}"),
            MelodyShortfall { frame } => write!(f, "melody-ends-early-at-frame-{frame}"),
            ZeroDuration { frame } => write!(f, "zero-duration-at-frame-{frame}"),
            InvalidPitch { frame, pitch } => write!(f, "invalid-pitch-{pitch}-at-frame-{frame}"),
            MissingRegions { kind } => write!(f, "missing-{kind}-regions"),
            FirstRegionNotAtZero { kind, frame } => write!(f, "first-{kind}-region-at-frame-{frame}"),
            UnsortedRegions { kind, frame } => write!(f, "unsorted-{kind}-regions-at-frame-{frame}"),
            RegionOutOfRange { kind, frame } => write!(f, "{kind}-region-out-of-range-at-frame-{frame}"),
            DuplicateChordRegion { frame } => write!(f, "duplicate-chord-region-at-frame-{frame}"),
            LeadingRestChord { frame } => write!(f, "leading-rest-chord-at-frame-{frame}"),
            UnsupportedMeter { frame } => write!(f, "unsupported-meter-at-frame-{frame}"),
            PickupTooLong { frame } => write!(f, "pickup-too-long-at-frame-{frame}"),
            TimeChangeOffBarline { frame } => write!(f, "time-change-off-barline-at-frame-{frame}"),
            IncompleteFinalBar { frame } => write!(f, "incomplete-final-bar-at-frame-{frame}"),
        }
    }
}

fn active_at<T: Copy>(regions: impl Iterator<Item = (u32, T)>, frame: u32) -> Option<T> {
    let mut cur = None;
    for (onset, v) in regions {
        if onset > frame {
            break;
        }
        cur = Some(v);
    }
    cur
}

impl LeadSheet {
    pub fn time_at(&self, frame: u32) -> Option<TimeSignature> {
        active_at(self.time_regions.iter().map(|r| (r.onset, r.time)), frame)
    }

    pub fn key_at(&self, frame: u32) -> Option<KeySignature> {
        active_at(self.key_regions.iter().map(|r| (r.onset, r.key)), frame)
    }

    /// Chord active at `frame`; `None` before the first region or inside a
    /// `N.C.` region.
    pub fn chord_at(&self, frame: u32) -> Option<&ChordSymbol> {
        let idx = self.chord_regions.partition_point(|r| r.onset <= frame);
        if idx == 0 {
            return None;
        }
        let c = &self.chord_regions[idx - 1].chord;
        (!c.is_rest()).then_some(c)
    }

    /// Per-frame pitch (`None` for rests), from the melody events.
    pub fn melody_frames(&self) -> Vec<Option<u8>> {
        let mut out = vec![None; self.total_frames as usize];
        for ev in &self.melody {
            for f in ev.onset..ev.end().min(self.total_frames) {
                out[f as usize] = ev.pitch;
            }
        }
        out
    }

    /// Bar layout: the pickup (if any) followed by bars sized by the active
    /// meter. A truncated final bar is reported with its actual length.
    pub fn bars(&self) -> Vec<Bar> {
        let mut bars = Vec::new();
        let Some(first) = self.time_at(0) else {
            return bars;
        };
        if self.pickup_frames > 0 {
            bars.push(Bar {
                start: 0,
                len: self.pickup_frames.min(self.total_frames),
                time: first,
                pickup: true,
            });
        }
        let mut pos = self.pickup_frames;
        while pos < self.total_frames {
            let time = self.time_at(pos).unwrap_or(first);
            let full = match frames_per_bar(time) {
                Ok(n) if n > 0 => n,
                _ => break,
            };
            let len = full.min(self.total_frames - pos);
            bars.push(Bar {
                start: pos,
                len,
                time,
                pickup: false,
            });
            pos += full;
        }
        bars
    }

    /// Number of complete (non-pickup) bars.
    pub fn full_bar_count(&self) -> usize {
        self.bars()
            .iter()
            .filter(|b| !b.pickup && b.len == b.full_len())
            .count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("lead sheet serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<LeadSheet, serde_json::Error> {
        serde_json::from_str(s)
    }
}

fn check_regions<T>(
    kind: &'static str,
    regions: &[T],
    onset: impl Fn(&T) -> u32,
    total: u32,
    must_start_at_zero: bool,
    out: &mut Vec<Violation>,
) {
    if regions.is_empty() {
        if must_start_at_zero {
            out.push(Violation::MissingRegions { kind });
        }
        return;
    }
    let first = onset(&regions[0]);
    if must_start_at_zero && first != 0 {
        out.push(Violation::FirstRegionNotAtZero { kind, frame: first });
    }
    for pair in regions.windows(2) {
        let (a, b) = (onset(&pair[0]), onset(&pair[1]));
        if b <= a {
            out.push(Violation::UnsortedRegions { kind, frame: b });
        }
    }
    for r in regions {
        if onset(r) >= total {
            out.push(Violation::RegionOutOfRange { kind, frame: onset(r) });
        }
    }
}

/// Lists every broken invariant; an empty list means the sheet is well formed.
pub fn validate_leadsheet(ls: &LeadSheet) -> Vec<Violation> {
    let mut out = Vec::new();
    if ls.total_frames == 0 {
        out.push(Violation::EmptyPiece);
        return out;
    }

    let mut cursor = 0u32;
    for ev in &ls.melody {
        if ev.duration == 0 {
            out.push(Violation::ZeroDuration { frame: ev.onset });
        }
        if let Some(p) = ev.pitch {
            if p == 0 || p > 127 {
                out.push(Violation::InvalidPitch {
                    frame: ev.onset,
                    pitch: p,
                });
            }
        }
        if ev.onset > cursor {
            out.push(Violation::MelodyGap { frame: cursor });
        } else if ev.onset < cursor {
            out.push(Violation::MelodyOverlap { frame: ev.onset });
        }
        cursor = cursor.max(ev.end());
    }
    if cursor > ls.total_frames {
        out.push(Violation::MelodyOverrun { frame: ls.total_frames });
    } else if cursor < ls.total_frames {
        out.push(Violation::MelodyShortfall { frame: cursor });
    }

    check_regions("time", &ls.time_regions, |r| r.onset, ls.total_frames, true, &mut out);
    check_regions("key", &ls.key_regions, |r| r.onset, ls.total_frames, true, &mut out);
    check_regions(
        "chord",
        &ls.chord_regions,
        |r| r.onset,
        ls.total_frames,
        false,
        &mut out,
    );

    if let Some(first) = ls.chord_regions.first() {
        if first.chord.is_rest() {
            out.push(Violation::LeadingRestChord { frame: first.onset });
        }
    }
    for pair in ls.chord_regions.windows(2) {
        if pair[0].chord == pair[1].chord {
            out.push(Violation::DuplicateChordRegion { frame: pair[1].onset });
        }
    }

    for r in &ls.time_regions {
        if frames_per_bar(r.time).is_err() {
            out.push(Violation::UnsupportedMeter { frame: r.onset });
        }
    }
    if out
        .iter()
        .any(|v| matches!(v, Violation::UnsupportedMeter { .. } | Violation::MissingRegions { .. }))
    {
        return out;
    }

    if let Some(first) = ls.time_at(0) {
        let fpb = frames_per_bar(first).unwrap_or(0);
        if ls.pickup_frames >= fpb {
            out.push(Violation::PickupTooLong {
                frame: ls.pickup_frames,
            });
        }
    }
    let bars = ls.bars();
    for r in &ls.time_regions {
        if r.onset == 0 {
            continue;
        }
        if !bars.iter().any(|b| !b.pickup && b.start == r.onset) {
            out.push(Violation::TimeChangeOffBarline { frame: r.onset });
        }
    }
    if let Some(last) = bars.last() {
        if !last.pickup && last.len != last.full_len() {
            out.push(Violation::IncompleteFinalBar { frame: last.start });
        }
    }
    out
}
