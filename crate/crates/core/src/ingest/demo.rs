//! Synthetic toy lead sheets with known chord patterns, so the full pipeline
//! runs without external data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::Corpus;
use crate::score::{
    frames_per_bar, ChordQuality, ChordRegion, ChordSymbol, KeyRegion, KeySignature, LeadSheet, MelodyEvent,
    TimeRegion, TimeSignature,
};

/// Scale-degree offsets of the major mode.
const DEGREE_OFFSETS: [u8; 7] = [0, 2, 4, 5, 7, 9, 11];

/// Progressions as (degree index, quality); one entry per chord slot.
const PROGRESSIONS: &[&[(usize, ChordQuality)]] = &[
    &[
        (0, ChordQuality::Major),
        (3, ChordQuality::Major),
        (4, ChordQuality::Dominant7),
        (0, ChordQuality::Major),
    ],
    &[
        (0, ChordQuality::Major),
        (5, ChordQuality::Minor),
        (3, ChordQuality::Major),
        (4, ChordQuality::Major),
    ],
    &[
        (0, ChordQuality::Major),
        (4, ChordQuality::Major),
        (5, ChordQuality::Minor),
        (3, ChordQuality::Major),
    ],
    &[
        (1, ChordQuality::Minor7),
        (4, ChordQuality::Dominant7),
        (0, ChordQuality::Major7),
        (5, ChordQuality::Minor),
    ],
    &[
        (0, ChordQuality::Major),
        (1, ChordQuality::Minor),
        (4, ChordQuality::Dominant7),
        (0, ChordQuality::Major),
    ],
    &[
        (5, ChordQuality::Minor),
        (3, ChordQuality::Major),
        (0, ChordQuality::Major),
        (4, ChordQuality::Major),
    ],
];

const BARS: u32 = 8;

fn chord_for(key: KeySignature, degree: usize, quality: ChordQuality) -> ChordSymbol {
    ChordSymbol::from_parts((key.tonic() + DEGREE_OFFSETS[degree]) % 12, quality, None)
}

/// Beat length in frames used to place melody notes.
fn beat_frames(ts: TimeSignature) -> u32 {
    if ts.is_compound() {
        6
    } else {
        16 / ts.denominator()
    }
}

fn pick_pitch(rng: &mut ChaCha8Rng, chord: &ChordSymbol, prev: u8) -> u8 {
    let mut candidates: Vec<u8> = (60u8..=79).filter(|p| chord.pitch_classes().contains(p % 12)).collect();
    candidates.sort_by_key(|&p| (p as i32 - prev as i32).abs());
    candidates[rng.random_range(0..3.min(candidates.len()))]
}

/// Generates one toy piece: eight bars, a looping progression with one or
/// two chords per bar, and a chord-tone melody with occasional passing tones.
pub fn demo_piece(seed: u64) -> LeadSheet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ts = match rng.random_range(0..10) {
        0..=5 => TimeSignature::COMMON,
        6 | 7 => TimeSignature::new(3, 4).unwrap(),
        _ => TimeSignature::new(6, 8).unwrap(),
    };
    let fpb = frames_per_bar(ts).unwrap();
    let beat = beat_frames(ts);
    let key = KeySignature::new(rng.random_range(-3..=3)).unwrap();
    let modulate = rng.random_bool(0.2);
    let key2 = KeySignature::new((key.fifths() + 1).min(7)).unwrap();
    let pickup = if rng.random_bool(0.25) { beat } else { 0 };
    let split_bars = ts == TimeSignature::COMMON && rng.random_bool(0.4);
    let progression = PROGRESSIONS[rng.random_range(0..PROGRESSIONS.len())];

    let total = pickup + BARS * fpb;
    let mut chord_regions: Vec<ChordRegion> = Vec::new();
    let mut slot = 0usize;
    for bar in 0..BARS {
        let start = pickup + bar * fpb;
        let active_key = if modulate && bar >= BARS / 2 { key2 } else { key };
        let halves: &[u32] = if split_bars && bar % 2 == 1 {
            &[0, fpb / 2]
        } else {
            &[0]
        };
        for &offset in halves {
            let (degree, quality) = progression[slot % progression.len()];
            slot += 1;
            let chord = chord_for(active_key, degree, quality);
            if chord_regions.last().map(|r| &r.chord) != Some(&chord) {
                chord_regions.push(ChordRegion {
                    onset: start + offset,
                    chord,
                });
            }
        }
    }

    let chord_at = |f: u32| -> &ChordSymbol {
        let i = chord_regions.partition_point(|r| r.onset <= f);
        &chord_regions[i.max(1) - 1].chord
    };

    let mut melody = Vec::new();
    let mut prev = 67u8;
    let mut f = 0u32;
    while f < total {
        let len = if f < pickup { pickup - f } else { beat.min(total - f) };
        let chord = chord_at(f.max(pickup)).clone();
        let phrase_end = f >= pickup && ((f - pickup) / fpb) % 4 == 3 && (f - pickup) % fpb + len >= fpb;
        if phrase_end && rng.random_bool(0.5) {
            melody.push(MelodyEvent {
                onset: f,
                duration: len,
                pitch: None,
            });
        } else if len >= 4 && len % 2 == 0 && rng.random_bool(0.3) {
            let p = pick_pitch(&mut rng, &chord, prev);
            let step: i32 = if rng.random_bool(0.5) { 2 } else { -2 };
            let passing = (p as i32 + step).clamp(55, 84) as u8;
            melody.push(MelodyEvent {
                onset: f,
                duration: len / 2,
                pitch: Some(p),
            });
            melody.push(MelodyEvent {
                onset: f + len / 2,
                duration: len / 2,
                pitch: Some(passing),
            });
            prev = passing;
        } else {
            let p = pick_pitch(&mut rng, &chord, prev);
            melody.push(MelodyEvent {
                onset: f,
                duration: len,
                pitch: Some(p),
            });
            prev = p;
        }
        f += len;
    }

    let mut key_regions = vec![KeyRegion { onset: 0, key }];
    if modulate && key2 != key {
        key_regions.push(KeyRegion {
            onset: pickup + (BARS / 2) * fpb,
            key: key2,
        });
    }

    LeadSheet {
        title: format!("demo {seed}"),
        melody,
        chord_regions,
        time_regions: vec![TimeRegion { onset: 0, time: ts }],
        key_regions,
        total_frames: total,
        pickup_frames: pickup,
        provenance: None,
    }
}

/// `count` toy pieces with ids `demo_000`, `demo_001`, ...
pub fn demo_corpus(count: usize, seed: u64) -> Corpus {
    Corpus::from_pieces((0..count).map(|i| {
        let piece_seed = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
        (format!("demo_{i:03}"), demo_piece(piece_seed))
    }))
    .expect("demo ids are unique")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::corpus::filter_reason;
    use crate::score::validate_leadsheet;

    #[test]
    fn demo_pieces_are_valid_and_pass_the_filter() {
        let c = demo_corpus(40, 1);
        for (id, ls) in c.pieces() {
            assert_eq!(validate_leadsheet(ls), vec![], "{id}");
            assert_eq!(filter_reason(ls), None, "{id}");
        }
    }

    #[test]
    fn demo_is_deterministic() {
        assert_eq!(demo_corpus(5, 9), demo_corpus(5, 9));
        assert_ne!(demo_piece(1), demo_piece(2));
    }
}
