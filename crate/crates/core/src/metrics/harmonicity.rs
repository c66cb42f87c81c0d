use serde::{Deserialize, Serialize};

use super::tonal::tonal_centroid;
use crate::score::{chord_to_pcp, ChordRegion, ChordSymbol, MelodyEvent, PitchClassSet};

/// Consonance score of the pitch-class interval from a chord tone up to the
/// melody: unison, thirds, fifth and sixths 1; perfect fourth 0; others -1.
pub fn interval_score(interval: u8) -> i32 {
    match interval % 12 {
        0 | 3 | 4 | 7 | 8 | 9 => 1,
        5 => 0,
        _ => -1,
    }
}

/// Best score of a melody pitch class against any chord tone.
pub fn pitch_consonance(melody_pc: u8, chord: PitchClassSet) -> Option<i32> {
    chord.iter().map(|c| interval_score((melody_pc + 12 - c) % 12)).max()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicityMetrics {
    /// Chord tone to non-chord tone ratio.
    pub ctnctr: Option<f64>,
    /// Pitch consonance score.
    pub pcs: Option<f64>,
    /// Melody-chord tonal distance.
    pub mctd: Option<f64>,
    pub chord_tones: usize,
    pub proper_non_chord_tones: usize,
    pub non_chord_tones: usize,
}

/// Chord sounding at each frame (`None` for rest or before the first region).
pub fn chord_frames(regions: &[ChordRegion], total_frames: u32) -> Vec<Option<&ChordSymbol>> {
    let mut out = vec![None; total_frames as usize];
    for (i, r) in regions.iter().enumerate() {
        let end = regions
            .get(i + 1)
            .map(|n| n.onset)
            .unwrap_or(total_frames)
            .min(total_frames);
        if r.chord.is_rest() {
            continue;
        }
        for slot in out.iter_mut().take(end as usize).skip(r.onset as usize) {
            *slot = Some(&r.chord);
        }
    }
    out
}

/// CTnCTR counts each note against the chord active at its onset; a
/// non-chord tone is proper when the next sounding note lies within two
/// semitones. PCS and MCTD are taken per frame over frames where both a
/// melody note and a chord sound, so MCTD weights each note by duration.
pub fn harmonicity_metrics(melody: &[MelodyEvent], regions: &[ChordRegion], total_frames: u32) -> HarmonicityMetrics {
    let chords = chord_frames(regions, total_frames);
    let notes: Vec<&MelodyEvent> = melody
        .iter()
        .filter(|e| e.pitch.is_some() && e.onset < total_frames)
        .collect();

    let (mut nc, mut np, mut nn) = (0usize, 0usize, 0usize);
    for (i, note) in notes.iter().enumerate() {
        let Some(chord) = chords[note.onset as usize] else {
            continue;
        };
        let pitch = note.pitch.expect("filtered");
        if chord.pitch_classes().contains(pitch % 12) {
            nc += 1;
            continue;
        }
        nn += 1;
        if let Some(next) = notes.get(i + 1) {
            let d = next.pitch.expect("filtered") as i32 - pitch as i32;
            if d.abs() <= 2 {
                np += 1;
            }
        }
    }
    let ctnctr = (nc + nn > 0).then(|| (nc + np) as f64 / (nc + nn) as f64);

    let mut pcs_sum = 0i64;
    let mut dist_sum = 0.0;
    let mut frames = 0usize;
    for note in &notes {
        let pitch = note.pitch.expect("filtered");
        let mut one_hot = [0.0; 12];
        one_hot[(pitch % 12) as usize] = 1.0;
        let melody_centroid = tonal_centroid(&one_hot).expect("one-hot profile");
        for f in note.onset..note.end().min(total_frames) {
            let Some(chord) = chords[f as usize] else { continue };
            pcs_sum += pitch_consonance(pitch % 12, chord.pitch_classes()).unwrap_or(-1) as i64;
            let cc = tonal_centroid(&chord_to_pcp(chord)).expect("sounding chord");
            dist_sum += melody_centroid.distance(&cc);
            frames += 1;
        }
    }
    HarmonicityMetrics {
        ctnctr,
        pcs: (frames > 0).then(|| pcs_sum as f64 / frames as f64),
        mctd: (frames > 0).then(|| dist_sum / frames as f64),
        chord_tones: nc,
        proper_non_chord_tones: np,
        non_chord_tones: nn,
    }
}
