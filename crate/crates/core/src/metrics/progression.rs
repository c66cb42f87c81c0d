use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tonal::tonal_centroid;
use crate::score::{chord_to_pcp, ChordRegion, ChordSymbol, KeyRegion, KeySignature};

/// Natural-log entropy of a histogram of counts.
pub fn entropy<I: IntoIterator<Item = usize>>(counts: I) -> f64 {
    let counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// The sounding chords of a region list: rests dropped, then adjacent
/// repeats merged.
pub fn sounding_progression(regions: &[ChordRegion]) -> Vec<&ChordSymbol> {
    let mut out: Vec<&ChordSymbol> = Vec::new();
    for r in regions.iter().filter(|r| !r.chord.is_rest()) {
        if out.last() != Some(&&r.chord) {
            out.push(&r.chord);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressionMetrics {
    /// Chord coverage: distinct chords.
    pub cc: usize,
    /// Chord histogram entropy.
    pub che: f64,
    /// Mean tonal distance between adjacent chords; 0 when undefined.
    pub ctd: f64,
    /// False when fewer than two chords make CTD undefined.
    pub ctd_defined: bool,
}

pub fn progression_metrics(regions: &[ChordRegion]) -> ProgressionMetrics {
    let prog = sounding_progression(regions);
    let mut hist: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &prog {
        *hist.entry(c.text()).or_default() += 1;
    }
    let centroids: Vec<_> = prog
        .iter()
        .map(|c| tonal_centroid(&chord_to_pcp(c)).expect("sounding chords have pitch classes"))
        .collect();
    let ctd_defined = centroids.len() >= 2;
    let ctd = if ctd_defined {
        centroids.windows(2).map(|w| w[0].distance(&w[1])).sum::<f64>() / (centroids.len() - 1) as f64
    } else {
        0.0
    };
    ProgressionMetrics {
        cc: hist.len(),
        che: entropy(hist.values().copied()),
        ctd,
        ctd_defined,
    }
}

pub const SCALE_DEGREE_LABELS: [&str; 8] = ["I", "II", "III", "IV", "V", "VI", "VII", "other"];

/// Chord-root counts by major-mode scale degree of the active key, with an
/// eighth bin for non-diatonic roots.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleDegreeHistogram(pub [usize; 8]);

impl ScaleDegreeHistogram {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn fractions(&self) -> [f64; 8] {
        let t = self.total();
        let mut out = [0.0; 8];
        if t > 0 {
            for (o, &c) in out.iter_mut().zip(&self.0) {
                *o = c as f64 / t as f64;
            }
        }
        out
    }

    pub fn add(&mut self, other: &ScaleDegreeHistogram) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

/// Degree bin of `root` in the major mode of `key` (0..=6), or 7.
pub fn scale_degree(root: u8, key: KeySignature) -> usize {
    let rel = (root as i32 - key.tonic() as i32).rem_euclid(12);
    [0, 2, 4, 5, 7, 9, 11].iter().position(|&d| d == rel).unwrap_or(7)
}

/// Counts every sounding chord region (in region order) by the degree of its
/// root in the key active at its onset.
pub fn scale_degree_histogram(regions: &[ChordRegion], key_regions: &[KeyRegion]) -> ScaleDegreeHistogram {
    let mut h = ScaleDegreeHistogram::default();
    for r in regions {
        let Some(root) = r.chord.root() else { continue };
        let i = key_regions.partition_point(|k| k.onset <= r.onset);
        let key = if i == 0 {
            key_regions.first().map(|k| k.key).unwrap_or(KeySignature::C_MAJOR)
        } else {
            key_regions[i - 1].key
        };
        h.0[scale_degree(root, key)] += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::parse_chord_symbol;

    fn regions(names: &[&str]) -> Vec<ChordRegion> {
        names
            .iter()
            .enumerate()
            .map(|(i, n)| ChordRegion {
                onset: 16 * i as u32,
                chord: parse_chord_symbol(n).unwrap(),
            })
            .collect()
    }

    #[test]
    fn rests_are_dropped_before_collapsing() {
        let m = progression_metrics(&regions(&["C", "N.C.", "C", "G"]));
        assert_eq!(m.cc, 2);
        assert!((m.che - 2f64.ln()).abs() < 1e-12);
        assert!(m.ctd_defined && m.ctd > 0.0);
    }

    #[test]
    fn single_chord_flags_ctd() {
        let m = progression_metrics(&regions(&["F"]));
        assert_eq!((m.cc, m.che, m.ctd, m.ctd_defined), (1, 0.0, 0.0, false));
        let m = progression_metrics(&[]);
        assert_eq!((m.cc, m.ctd_defined), (0, false));
    }

    #[test]
    fn degrees_in_f() {
        let f = KeySignature::new(-1).unwrap();
        let keys = [KeyRegion { onset: 0, key: f }];
        let h = scale_degree_histogram(&regions(&["F", "C7", "F"]), &keys);
        assert_eq!(h.0, [2, 0, 0, 0, 1, 0, 0, 0]);
        let c = [KeyRegion {
            onset: 0,
            key: KeySignature::C_MAJOR,
        }];
        assert_eq!(scale_degree_histogram(&regions(&["C#"]), &c).0[7], 1);
    }
}
