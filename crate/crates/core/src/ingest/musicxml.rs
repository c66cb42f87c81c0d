//! Reader for a small MusicXML subset.
//!
//! Supported: `score-partwise` with a single monophonic part; `divisions`,
//! `key/fifths`, `time/beats` + `beat-type`, `note` (pitch or rest, duration,
//! tie), `backup`/`forward`, and `harmony` (root, kind, optional bass and
//! `offset`). Grace notes, cue notes, lyrics, repeats and endings are ignored
//! with a warning; repeats are not unrolled.

use log::warn;
use roxmltree::{Document, Node};
use thiserror::Error;

use crate::score::chord::{default_spelling, ChordQuality, ChordSymbol};
use crate::score::{
    frames_per_bar, parse_chord_symbol, ChordRegion, KeyRegion, KeySignature, LeadSheet, MelodyEvent, MeterError,
    TimeRegion, TimeSignature,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("document is not UTF-8")]
    Encoding,
    #[error("unsupported content: {0}")]
    Unsupported(String),
    #[error("measure {measure}: duration does not fit the sixteenth-note grid")]
    Quantization { measure: String },
    #[error("measure {measure}: {detail}")]
    Harmony { measure: String, detail: String },
    #[error("measure {measure}: {source}")]
    Meter {
        measure: String,
        #[source]
        source: MeterError,
    },
    #[error("measure {measure}: missing or malformed <{element}>")]
    Malformed { measure: String, element: &'static str },
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn child_text<'a>(node: Node<'a, '_>, name: &str) -> Option<&'a str> {
    child(node, name).and_then(|c| c.text()).map(str::trim)
}

fn midi_pitch(step: &str, alter: i32, octave: i32) -> Option<u8> {
    let base = match step {
        "C" => 0,
        "D" => 2,
        "E" => 4,
        "F" => 5,
        "G" => 7,
        "A" => 9,
        "B" => 11,
        _ => return None,
    };
    let midi = (octave + 1) * 12 + base + alter;
    (1..=127).contains(&midi).then_some(midi as u8)
}

fn spelled(step: &str, alter: i32) -> Option<String> {
    if !matches!(step, "A" | "B" | "C" | "D" | "E" | "F" | "G") {
        return None;
    }
    match alter {
        0 => Some(step.to_string()),
        1 => Some(format!("{step}#")),
        -1 => Some(format!("{step}b")),
        _ => None,
    }
}

/// Maps a MusicXML `kind` (plus any `degree` additions) to a quality.
fn harmony_quality(kind: &str, harmony: Node) -> Option<ChordQuality> {
    use ChordQuality::*;
    let degrees: Vec<(i32, i32, String)> = harmony
        .children()
        .filter(|c| c.has_tag_name("degree"))
        .map(|d| {
            let value = child_text(d, "degree-value").and_then(|v| v.parse().ok()).unwrap_or(0);
            let alter = child_text(d, "degree-alter").and_then(|v| v.parse().ok()).unwrap_or(0);
            let ty = child_text(d, "degree-type").unwrap_or("").to_string();
            (value, alter, ty)
        })
        .collect();
    let has_add = |v: i32| degrees.iter().any(|(dv, _, t)| *dv == v && t == "add");
    let q = match kind {
        "major" if has_add(9) => Add9,
        "major" => Major,
        "minor" => Minor,
        "augmented" => Augmented,
        "diminished" => Diminished,
        "dominant" | "dominant-seventh" => Dominant7,
        "major-seventh" => Major7,
        "minor-seventh" => Minor7,
        "diminished-seventh" => Diminished7,
        "augmented-seventh" => Augmented7,
        "half-diminished" => HalfDiminished7,
        "major-minor" => MinorMajor7,
        "major-sixth" => Major6,
        "minor-sixth" => Minor6,
        "dominant-ninth" => Dominant9,
        "major-ninth" => Major9,
        "minor-ninth" => Minor9,
        "dominant-11th" => Dominant11,
        "dominant-13th" => Dominant13,
        "suspended-second" => Sus2,
        "suspended-fourth" if has_add(7) => Dominant7Sus4,
        "suspended-fourth" => Sus4,
        "none" => NoChord,
        _ => return None,
    };
    if degrees.iter().any(|(v, _, t)| !(t == "add" && (*v == 9 || *v == 7))) {
        warn!("ignoring unsupported <degree> alteration on `{kind}` harmony");
    }
    Some(q)
}

fn parse_harmony(h: Node, measure: &str) -> Result<ChordSymbol, IngestError> {
    let bad = |detail: String| IngestError::Harmony {
        measure: measure.to_string(),
        detail,
    };
    let kind_node = child(h, "kind").ok_or_else(|| bad("harmony without <kind>".into()))?;
    let kind = kind_node.text().map(str::trim).unwrap_or("");
    let quality = harmony_quality(kind, h).ok_or_else(|| bad(format!("unknown harmony kind `{kind}`")))?;
    if quality == ChordQuality::NoChord {
        return Ok(ChordSymbol::rest());
    }
    let root = child(h, "root").ok_or_else(|| bad("harmony without <root>".into()))?;
    let step = child_text(root, "root-step").unwrap_or("");
    let alter: i32 = child_text(root, "root-alter")
        .and_then(|a| a.parse::<f64>().ok())
        .unwrap_or(0.0) as i32;
    let root_name = spelled(step, alter).ok_or_else(|| bad(format!("malformed root `{step}` alter {alter}")))?;
    let mut text = format!("{root_name}{}", quality.suffix());
    if let Some(bass) = child(h, "bass") {
        let bstep = child_text(bass, "bass-step").unwrap_or("");
        let balter: i32 = child_text(bass, "bass-alter")
            .and_then(|a| a.parse::<f64>().ok())
            .unwrap_or(0.0) as i32;
        let bname = spelled(bstep, balter).ok_or_else(|| bad(format!("malformed bass `{bstep}`")))?;
        text.push('/');
        text.push_str(&bname);
    }
    parse_chord_symbol(&text).map_err(|e| bad(e.to_string()))
}

struct Builder {
    melody: Vec<MelodyEvent>,
    last_tie_start: bool,
}

impl Builder {
    fn end(&self) -> u32 {
        self.melody.last().map(|e| e.end()).unwrap_or(0)
    }

    fn push_rest(&mut self, onset: u32, duration: u32) {
        if duration == 0 {
            return;
        }
        if let Some(last) = self.melody.last_mut() {
            if last.pitch.is_none() && last.end() == onset {
                last.duration += duration;
                return;
            }
        }
        self.melody.push(MelodyEvent {
            onset,
            duration,
            pitch: None,
        });
        self.last_tie_start = false;
    }

    fn push_note(&mut self, onset: u32, duration: u32, pitch: Option<u8>, tie_stop: bool, tie_start: bool) {
        let gap = onset - self.end();
        self.push_rest(self.end(), gap);
        match pitch {
            None => self.push_rest(onset, duration),
            Some(p) => {
                let merged = match self.melody.last_mut() {
                    Some(last) if tie_stop && self.last_tie_start && last.pitch == Some(p) && last.end() == onset => {
                        last.duration += duration;
                        true
                    }
                    _ => false,
                };
                if !merged {
                    self.melody.push(MelodyEvent {
                        onset,
                        duration,
                        pitch: Some(p),
                    });
                }
                self.last_tie_start = tie_start;
            }
        }
    }
}

fn quarters_to_frames(q: f64) -> u32 {
    (q * 4.0).round().max(0.0) as u32
}

/// Parses a MusicXML document into a lead sheet on the sixteenth grid.
pub fn parse_musicxml(document: &[u8]) -> Result<LeadSheet, IngestError> {
    let text = std::str::from_utf8(document).map_err(|_| IngestError::Encoding)?;
    let doc = Document::parse(text)?;
    let root = doc.root_element();
    if !root.has_tag_name("score-partwise") {
        return Err(IngestError::Unsupported(format!(
            "root element <{}>",
            root.tag_name().name()
        )));
    }
    let title = child(root, "work")
        .and_then(|w| child_text(w, "work-title"))
        .or_else(|| child_text(root, "movement-title"))
        .unwrap_or("untitled")
        .to_string();
    let parts: Vec<Node> = root.children().filter(|c| c.has_tag_name("part")).collect();
    let part = match parts.as_slice() {
        [p] => *p,
        [] => return Err(IngestError::Unsupported("score has no <part>".into())),
        _ => {
            return Err(IngestError::Unsupported(format!(
                "{} parts (expected one)",
                parts.len()
            )))
        }
    };

    let mut divisions: f64 = 1.0;
    let mut time: Option<TimeSignature> = None;
    let mut key: Option<KeySignature> = None;
    let mut time_regions: Vec<TimeRegion> = Vec::new();
    let mut key_regions: Vec<KeyRegion> = Vec::new();
    let mut harmonies: Vec<(u32, ChordSymbol)> = Vec::new();
    let mut builder = Builder {
        melody: Vec::new(),
        last_tie_start: false,
    };
    let mut measure_start: u32 = 0;
    let mut pickup_frames = 0u32;
    let mut warned_repeat = false;

    for (m_idx, measure) in part.children().filter(|c| c.has_tag_name("measure")).enumerate() {
        let label = measure
            .attribute("number")
            .map(str::to_string)
            .unwrap_or_else(|| (m_idx + 1).to_string());
        let mut cursor_q = 0.0f64;
        let mut max_q = 0.0f64;
        let frame_of = |q: f64| measure_start + quarters_to_frames(q);

        for el in measure.children().filter(|c| c.is_element()) {
            match el.tag_name().name() {
                "attributes" => {
                    if let Some(d) = child_text(el, "divisions") {
                        divisions = d
                            .parse()
                            .ok()
                            .filter(|&d: &f64| d > 0.0)
                            .ok_or(IngestError::Malformed {
                                measure: label.clone(),
                                element: "divisions",
                            })?;
                    }
                    if let Some(k) = child(el, "key") {
                        let fifths: i32 =
                            child_text(k, "fifths")
                                .and_then(|f| f.parse().ok())
                                .ok_or(IngestError::Malformed {
                                    measure: label.clone(),
                                    element: "fifths",
                                })?;
                        let ks = KeySignature::new(fifths).map_err(|source| IngestError::Meter {
                            measure: label.clone(),
                            source,
                        })?;
                        if key != Some(ks) {
                            let onset = frame_of(cursor_q);
                            key_regions.retain(|r| r.onset != onset);
                            key_regions.push(KeyRegion { onset, key: ks });
                            key = Some(ks);
                        }
                    }
                    if let Some(t) = child(el, "time") {
                        let malformed = || IngestError::Malformed {
                            measure: label.clone(),
                            element: "time",
                        };
                        let beats: u32 = child_text(t, "beats")
                            .and_then(|b| b.parse().ok())
                            .ok_or_else(malformed)?;
                        let beat_type: u32 = child_text(t, "beat-type")
                            .and_then(|b| b.parse().ok())
                            .ok_or_else(malformed)?;
                        let meter = |source| IngestError::Meter {
                            measure: label.clone(),
                            source,
                        };
                        let ts = TimeSignature::new(beats, beat_type).map_err(meter)?;
                        frames_per_bar(ts).map_err(meter)?;
                        if cursor_q > 0.0 {
                            return Err(IngestError::Unsupported(format!("time change inside measure {label}")));
                        }
                        if time != Some(ts) {
                            time_regions.retain(|r| r.onset != measure_start);
                            time_regions.push(TimeRegion {
                                onset: measure_start,
                                time: ts,
                            });
                            time = Some(ts);
                        }
                    }
                }
                "harmony" => {
                    let offset_q = child_text(el, "offset")
                        .and_then(|o| o.parse::<f64>().ok())
                        .unwrap_or(0.0)
                        / divisions;
                    let chord = parse_harmony(el, &label)?;
                    harmonies.push((frame_of(cursor_q + offset_q), chord));
                }
                "note" => {
                    if child(el, "grace").is_some() {
                        warn!("measure {label}: grace note ignored");
                        continue;
                    }
                    if child(el, "cue").is_some() {
                        warn!("measure {label}: cue note ignored");
                        continue;
                    }
                    if child(el, "chord").is_some() {
                        return Err(IngestError::Unsupported(format!(
                            "chord notes (polyphony) in measure {label}"
                        )));
                    }
                    let dur: f64 =
                        child_text(el, "duration")
                            .and_then(|d| d.parse().ok())
                            .ok_or(IngestError::Malformed {
                                measure: label.clone(),
                                element: "duration",
                            })?;
                    let start_q = cursor_q;
                    cursor_q += dur / divisions;
                    max_q = max_q.max(cursor_q);
                    let (onset, end) = (frame_of(start_q), frame_of(cursor_q));
                    if end <= onset {
                        return Err(IngestError::Quantization { measure: label.clone() });
                    }
                    if onset < builder.end() {
                        return Err(IngestError::Unsupported(format!(
                            "overlapping notes (polyphony) in measure {label}"
                        )));
                    }
                    let pitch = if child(el, "rest").is_some() {
                        None
                    } else {
                        let p = child(el, "pitch").ok_or(IngestError::Malformed {
                            measure: label.clone(),
                            element: "pitch",
                        })?;
                        let step = child_text(p, "step").unwrap_or("");
                        let alter = child_text(p, "alter")
                            .and_then(|a| a.parse::<f64>().ok())
                            .unwrap_or(0.0) as i32;
                        let octave: i32 = child_text(p, "octave").and_then(|o| o.parse().ok()).unwrap_or(-10);
                        Some(midi_pitch(step, alter, octave).ok_or(IngestError::Malformed {
                            measure: label.clone(),
                            element: "pitch",
                        })?)
                    };
                    let ties: Vec<&str> = el
                        .children()
                        .filter(|c| c.has_tag_name("tie"))
                        .filter_map(|t| t.attribute("type"))
                        .collect();
                    builder.push_note(
                        onset,
                        end - onset,
                        pitch,
                        ties.contains(&"stop"),
                        ties.contains(&"start"),
                    );
                }
                "backup" => {
                    let dur: f64 = child_text(el, "duration").and_then(|d| d.parse().ok()).unwrap_or(0.0);
                    cursor_q = (cursor_q - dur / divisions).max(0.0);
                }
                "forward" => {
                    let dur: f64 = child_text(el, "duration").and_then(|d| d.parse().ok()).unwrap_or(0.0);
                    cursor_q += dur / divisions;
                    max_q = max_q.max(cursor_q);
                }
                "barline" if (child(el, "repeat").is_some() || child(el, "ending").is_some()) && !warned_repeat => {
                    warn!("repeats and endings are ignored (not unrolled)");
                    warned_repeat = true;
                }
                _ => {}
            }
        }

        let ts = match time {
            Some(t) => t,
            None => {
                warn!("no time signature; assuming 4/4");
                time_regions.push(TimeRegion {
                    onset: 0,
                    time: TimeSignature::COMMON,
                });
                time = Some(TimeSignature::COMMON);
                TimeSignature::COMMON
            }
        };
        let full = frames_per_bar(ts).map_err(|source| IngestError::Meter {
            measure: label.clone(),
            source,
        })?;
        let content = quarters_to_frames(max_q);
        let is_first = m_idx == 0;
        let len = if is_first && content > 0 && (content < full || measure.attribute("implicit") == Some("yes")) {
            pickup_frames = content.min(full - 1);
            pickup_frames
        } else if content > full {
            return Err(IngestError::Unsupported(format!(
                "measure {label} is longer than its time signature"
            )));
        } else {
            full
        };
        let end = measure_start + len;
        builder.push_rest(builder.end(), end - builder.end());
        measure_start = end;
    }

    if key_regions.first().map(|r| r.onset) != Some(0) {
        warn!("no key signature at the start; assuming 0 fifths");
        key_regions.insert(
            0,
            KeyRegion {
                onset: 0,
                key: KeySignature::C_MAJOR,
            },
        );
    }
    key_regions.dedup_by(|b, a| a.key == b.key);

    let total_frames = measure_start;
    harmonies.sort_by_key(|(f, _)| *f);
    let mut chord_regions: Vec<ChordRegion> = Vec::new();
    for (onset, chord) in harmonies {
        if onset >= total_frames {
            continue;
        }
        if let Some(last) = chord_regions.last_mut() {
            if last.onset == onset {
                *last = ChordRegion { onset, chord };
                continue;
            }
        }
        chord_regions.push(ChordRegion { onset, chord });
    }
    chord_regions.dedup_by(|b, a| a.chord == b.chord);
    while chord_regions.first().is_some_and(|r| r.chord.is_rest()) {
        chord_regions.remove(0);
    }
    chord_regions.dedup_by(|b, a| a.chord == b.chord);

    Ok(LeadSheet {
        title,
        melody: builder.melody,
        chord_regions,
        time_regions,
        key_regions,
        total_frames,
        pickup_frames,
        provenance: None,
    })
}

/// Writes a lead sheet as a MusicXML document in the supported subset
/// (divisions = 4, one note per event split at barlines with ties).
pub fn write_musicxml(ls: &LeadSheet) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(out, r#"<score-partwise version="3.1">"#);
    let _ = writeln!(out, "  <work><work-title>{}</work-title></work>", xml_escape(&ls.title));
    let _ = writeln!(
        out,
        r#"  <part-list><score-part id="P1"><part-name>Melody</part-name></score-part></part-list>"#
    );
    let _ = writeln!(out, r#"  <part id="P1">"#);
    let step_names = ["C", "C", "D", "D", "E", "F", "F", "G", "G", "A", "A", "B"];
    let step_alters = [0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0];
    for (n, bar) in ls.bars().iter().enumerate() {
        let (s, e) = (bar.start, bar.start + bar.len);
        if bar.pickup {
            let _ = writeln!(out, r#"    <measure number="0" implicit="yes">"#);
        } else {
            let _ = writeln!(
                out,
                r#"    <measure number="{}">"#,
                n + usize::from(ls.pickup_frames == 0)
            );
        }
        let time_change = ls.time_regions.iter().find(|r| r.onset == s).map(|r| r.time);
        let key_change = ls.key_regions.iter().find(|r| r.onset == s).map(|r| r.key);
        if s == 0 || time_change.is_some() || key_change.is_some() {
            let _ = write!(out, "      <attributes>");
            if s == 0 {
                let _ = write!(out, "<divisions>4</divisions>");
            }
            if let Some(k) = key_change {
                let _ = write!(out, "<key><fifths>{}</fifths></key>", k.fifths());
            }
            if let Some(t) = time_change {
                let _ = write!(
                    out,
                    "<time><beats>{}</beats><beat-type>{}</beat-type></time>",
                    t.numerator(),
                    t.denominator()
                );
            }
            let _ = writeln!(out, "</attributes>");
        }
        for ev in ls.melody.iter().filter(|ev| ev.onset < e && ev.end() > s) {
            let (a, b) = (ev.onset.max(s), ev.end().min(e));
            for region in ls.chord_regions.iter().filter(|r| r.onset >= a && r.onset < b) {
                let _ = writeln!(out, "      {}", harmony_xml(&region.chord, region.onset - a));
            }
            match ev.pitch {
                None => {
                    let _ = writeln!(out, "      <note><rest/><duration>{}</duration></note>", b - a);
                }
                Some(p) => {
                    let pc = (p % 12) as usize;
                    let octave = p as i32 / 12 - 1;
                    let mut ties = String::new();
                    if a > ev.onset {
                        ties.push_str(r#"<tie type="stop"/>"#);
                    }
                    if b < ev.end() {
                        ties.push_str(r#"<tie type="start"/>"#);
                    }
                    let alter = if step_alters[pc] != 0 {
                        format!("<alter>{}</alter>", step_alters[pc])
                    } else {
                        String::new()
                    };
                    let _ = writeln!(
                        out,
                        "      <note><pitch><step>{}</step>{alter}<octave>{octave}</octave></pitch><duration>{}</duration>{ties}</note>",
                        step_names[pc],
                        b - a
                    );
                }
            }
        }
        let _ = writeln!(out, "    </measure>");
    }
    let _ = writeln!(out, "  </part>");
    let _ = writeln!(out, "</score-partwise>");
    out
}

fn harmony_xml(chord: &ChordSymbol, offset: u32) -> String {
    let offset = if offset > 0 {
        format!("<offset>{offset}</offset>")
    } else {
        String::new()
    };
    let Some(root) = chord.root() else {
        return format!("<harmony><kind>none</kind>{offset}</harmony>");
    };
    use ChordQuality::*;
    let (kind, degree) = match chord.quality() {
        Major | NoChord => ("major", ""),
        Minor => ("minor", ""),
        Diminished => ("diminished", ""),
        Augmented => ("augmented", ""),
        Sus2 => ("suspended-second", ""),
        Sus4 => ("suspended-fourth", ""),
        Major6 => ("major-sixth", ""),
        Minor6 => ("minor-sixth", ""),
        Dominant7 => ("dominant", ""),
        Major7 => ("major-seventh", ""),
        Minor7 => ("minor-seventh", ""),
        HalfDiminished7 => ("half-diminished", ""),
        Diminished7 => ("diminished-seventh", ""),
        Dominant9 => ("dominant-ninth", ""),
        Major9 => ("major-ninth", ""),
        Minor9 => ("minor-ninth", ""),
        Add9 => ("major", "<degree><degree-value>9</degree-value><degree-alter>0</degree-alter><degree-type>add</degree-type></degree>"),
        Dominant7Sus4 => ("suspended-fourth", "<degree><degree-value>7</degree-value><degree-alter>-1</degree-alter><degree-type>add</degree-type></degree>"),
        MinorMajor7 => ("major-minor", ""),
        Augmented7 => ("augmented-seventh", ""),
        Dominant11 => ("dominant-11th", ""),
        Dominant13 => ("dominant-13th", ""),
    };
    let root_text = note_xml("root", &chord.text()[..root_name_len(chord.text())], root);
    let bass = match (chord.bass(), chord.text().split_once('/')) {
        (Some(b), Some((_, name))) => format!("<bass>{}</bass>", note_xml("bass", name, b)),
        _ => String::new(),
    };
    format!("<harmony><root>{root_text}</root><kind>{kind}</kind>{bass}{degree}{offset}</harmony>")
}

fn root_name_len(text: &str) -> usize {
    match text.as_bytes().get(1) {
        Some(b'#') | Some(b'b') => 2,
        _ => 1,
    }
}

fn note_xml(prefix: &str, name: &str, pc: u8) -> String {
    let name = if name.is_empty() { default_spelling(pc) } else { name };
    let step = &name[..1];
    let alter = match name.get(1..) {
        Some("#") => format!("<{prefix}-alter>1</{prefix}-alter>"),
        Some("b") => format!("<{prefix}-alter>-1</{prefix}-alter>"),
        _ => String::new(),
    };
    format!("<{prefix}-step>{step}</{prefix}-step>{alter}")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
