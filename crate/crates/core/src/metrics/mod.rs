//! Evaluation metrics for generated chord progressions.
//!
//! Each side of a piece pair (generated, ground truth) gets progression
//! metrics (CC, CHE, CTD), melody/chord harmonicity (CTnCTR, PCS, MCTD) and
//! harmonic-rhythm metrics (HRC, HRHE, CBS), plus beat-onset and scale-degree
//! histograms. Frame accuracy compares the two sides. Entropies use natural
//! logarithms.

mod harmonicity;
mod progression;
mod rhythm;
mod tonal;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use harmonicity::{chord_frames, harmonicity_metrics, interval_score, pitch_consonance, HarmonicityMetrics};
pub use progression::{
    entropy, progression_metrics, scale_degree, scale_degree_histogram, sounding_progression, ProgressionMetrics,
    ScaleDegreeHistogram, SCALE_DEGREE_LABELS,
};
pub use rhythm::{bar_patterns, rhythm_metrics, RhythmMetrics};
pub use tonal::{tonal_centroid, tonal_distance, TonalCentroid, RADII};

use crate::encoding::{build_vocab_from, encode, EncodeError};
use crate::provenance::Provenance;
use crate::score::LeadSheet;

/// How harmonic-rhythm types are defined; echoed into every report.
pub const HARMONIC_RHYTHM_TYPE: &str =
    "per-bar chord-onset bitmask; pickup left-padded and short final bar right-padded to full bar length";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("pitch-class profile is all zeros")]
    EmptyProfile,
    #[error("pitch-class profile has negative or non-finite entries")]
    BadProfile,
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("piece `{id}`: generated has {generated} frames, truth has {truth}")]
    FrameMismatch { id: String, generated: u32, truth: u32 },
    #[error("no pieces to evaluate")]
    Empty,
    #[error("piece `{id}`: {source}")]
    Encode {
        id: String,
        #[source]
        source: EncodeError,
    },
}

/// Share of frames whose chord indices agree.
pub fn frame_accuracy(generated: &[u32], truth: &[u32]) -> Result<f64, MetricsError> {
    if generated.len() != truth.len() {
        return Err(MetricsError::LengthMismatch(generated.len(), truth.len()));
    }
    if generated.is_empty() {
        return Ok(0.0);
    }
    let hits = generated.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / generated.len() as f64)
}

/// Metrics of one lead sheet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideMetrics {
    pub cc: usize,
    pub che: f64,
    pub ctd: f64,
    pub ctd_defined: bool,
    pub ctnctr: Option<f64>,
    pub pcs: Option<f64>,
    pub mctd: Option<f64>,
    pub hrc: usize,
    pub hrhe: f64,
    pub cbs: Option<f64>,
    pub beat_onset_histogram: [usize; 4],
    pub scale_degree_histogram: ScaleDegreeHistogram,
}

pub fn sheet_metrics(id: &str, sheet: &LeadSheet) -> Result<SideMetrics, MetricsError> {
    let vocab = build_vocab_from([sheet]);
    let enc = encode(sheet, &vocab).map_err(|source| MetricsError::Encode { id: id.into(), source })?;
    let p = progression_metrics(&sheet.chord_regions);
    let h = harmonicity_metrics(&sheet.melody, &sheet.chord_regions, sheet.total_frames);
    let r = rhythm_metrics(&enc.chord, &enc);
    Ok(SideMetrics {
        cc: p.cc,
        che: p.che,
        ctd: p.ctd,
        ctd_defined: p.ctd_defined,
        ctnctr: h.ctnctr,
        pcs: h.pcs,
        mctd: h.mctd,
        hrc: r.hrc,
        hrhe: r.hrhe,
        cbs: r.cbs,
        beat_onset_histogram: r.beat_onset_histogram,
        scale_degree_histogram: scale_degree_histogram(&sheet.chord_regions, &sheet.key_regions),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceReport {
    pub id: String,
    pub acc: f64,
    pub generated: SideMetrics,
    pub truth: SideMetrics,
}

/// Scores one generated/truth pair. Both sheets must span the same frames;
/// chords are compared by symbol.
pub fn piece_report(id: &str, generated: &LeadSheet, truth: &LeadSheet) -> Result<PieceReport, MetricsError> {
    if generated.total_frames != truth.total_frames {
        return Err(MetricsError::FrameMismatch {
            id: id.into(),
            generated: generated.total_frames,
            truth: truth.total_frames,
        });
    }
    let vocab = build_vocab_from([generated, truth]);
    let wrap = |source| MetricsError::Encode { id: id.into(), source };
    let g = encode(generated, &vocab).map_err(wrap)?;
    let t = encode(truth, &vocab).map_err(wrap)?;
    Ok(PieceReport {
        id: id.into(),
        acc: frame_accuracy(&g.chord, &t.chord)?,
        generated: sheet_metrics(id, generated)?,
        truth: sheet_metrics(id, truth)?,
    })
}

/// Arithmetic mean over the pieces where a value is present.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStat {
    pub mean: Option<f64>,
    pub count: usize,
}

impl MeanStat {
    pub fn of<I: IntoIterator<Item = Option<f64>>>(values: I) -> Self {
        let (sum, count) = values
            .into_iter()
            .flatten()
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        MeanStat {
            mean: (count > 0).then(|| sum / count as f64),
            count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideAggregate {
    pub cc: MeanStat,
    pub che: MeanStat,
    /// Pieces with fewer than two chords are excluded.
    pub ctd: MeanStat,
    pub ctnctr: MeanStat,
    pub pcs: MeanStat,
    pub mctd: MeanStat,
    pub hrc: MeanStat,
    pub hrhe: MeanStat,
    pub cbs: MeanStat,
    pub beat_onset_histogram: [usize; 4],
    pub scale_degree_histogram: ScaleDegreeHistogram,
}

impl SideAggregate {
    fn of(sides: &[&SideMetrics]) -> Self {
        let stat = |f: &dyn Fn(&SideMetrics) -> Option<f64>| MeanStat::of(sides.iter().map(|s| f(s)));
        let mut beat = [0usize; 4];
        let mut degrees = ScaleDegreeHistogram::default();
        for s in sides {
            for (b, v) in beat.iter_mut().zip(&s.beat_onset_histogram) {
                *b += v;
            }
            degrees.add(&s.scale_degree_histogram);
        }
        SideAggregate {
            cc: stat(&|s| Some(s.cc as f64)),
            che: stat(&|s| Some(s.che)),
            ctd: stat(&|s| s.ctd_defined.then_some(s.ctd)),
            ctnctr: stat(&|s| s.ctnctr),
            pcs: stat(&|s| s.pcs),
            mctd: stat(&|s| s.mctd),
            hrc: stat(&|s| Some(s.hrc as f64)),
            hrhe: stat(&|s| Some(s.hrhe)),
            cbs: stat(&|s| s.cbs),
            beat_onset_histogram: beat,
            scale_degree_histogram: degrees,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub pieces: usize,
    pub acc: MeanStat,
    pub generated: SideAggregate,
    pub truth: SideAggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub harmonic_rhythm_type: String,
    pub aggregate: Aggregate,
    pub pieces: Vec<PieceReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Averages per-piece reports (kept in the given order).
pub fn aggregate(pieces: Vec<PieceReport>) -> Result<MetricsReport, MetricsError> {
    if pieces.is_empty() {
        return Err(MetricsError::Empty);
    }
    let gen: Vec<&SideMetrics> = pieces.iter().map(|p| &p.generated).collect();
    let truth: Vec<&SideMetrics> = pieces.iter().map(|p| &p.truth).collect();
    let aggregate = Aggregate {
        pieces: pieces.len(),
        acc: MeanStat::of(pieces.iter().map(|p| Some(p.acc))),
        generated: SideAggregate::of(&gen),
        truth: SideAggregate::of(&truth),
    };
    Ok(MetricsReport {
        harmonic_rhythm_type: HARMONIC_RHYTHM_TYPE.into(),
        aggregate,
        pieces,
        provenance: None,
    })
}

/// Scores `(id, generated, truth)` triples and aggregates them.
pub fn evaluate(pairs: &[(String, LeadSheet, LeadSheet)]) -> Result<MetricsReport, MetricsError> {
    let pieces = pairs
        .iter()
        .map(|(id, g, t)| piece_report(id, g, t))
        .collect::<Result<Vec<_>, _>>()?;
    aggregate(pieces)
}

const SIDE_COLUMNS: [&str; 10] = [
    "cc",
    "che",
    "ctd",
    "ctnctr",
    "pcs",
    "mctd",
    "hrc",
    "hrhe",
    "cbs",
    "scale_degree_I",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn side_cells(s: &SideMetrics) -> Vec<String> {
    vec![
        s.cc.to_string(),
        s.che.to_string(),
        opt(s.ctd_defined.then_some(s.ctd)),
        opt(s.ctnctr),
        opt(s.pcs),
        opt(s.mctd),
        s.hrc.to_string(),
        s.hrhe.to_string(),
        opt(s.cbs),
        s.scale_degree_histogram.fractions()[0].to_string(),
    ]
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Header and one row per piece; absent values are empty cells.
    pub fn csv_table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = vec!["id".to_string(), "acc".to_string()];
        for side in ["gen", "truth"] {
            header.extend(SIDE_COLUMNS.iter().map(|c| format!("{side}_{c}")));
        }
        let rows = self
            .pieces
            .iter()
            .map(|p| {
                let mut row = vec![p.id.clone(), p.acc.to_string()];
                row.extend(side_cells(&p.generated));
                row.extend(side_cells(&p.truth));
                row
            })
            .collect();
        (header, rows)
    }
}
