use std::fs;
use std::path::{Path, PathBuf};

use chordframe::ingest::{corpus_filter, filter_reason, parse_musicxml, Corpus, FilterReason};
use chordframe::score::{validate_leadsheet, LeadSheet};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/musicxml")
}

fn fixtures() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "musicxml"))
        .collect();
    v.sort();
    v
}

fn parse(name: &str) -> LeadSheet {
    parse_musicxml(&fs::read(fixture_dir().join(format!("{name}.musicxml"))).unwrap()).unwrap()
}

/// Set `UPDATE_GOLDEN=1` to rewrite the frozen JSON after a reviewed change.
#[test]
fn fixtures_match_frozen_json() {
    let files = fixtures();
    assert!(files.len() >= 10);
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for path in files {
        let sheet = parse_musicxml(&fs::read(&path).unwrap()).unwrap();
        assert!(validate_leadsheet(&sheet).is_empty(), "{}", path.display());
        let json = sheet.to_json();
        let golden = path.with_extension("json");
        if update {
            fs::write(&golden, &json).unwrap();
        }
        let frozen = fs::read_to_string(&golden).unwrap_or_else(|_| panic!("missing {}", golden.display()));
        assert_eq!(json, frozen, "{}", path.display());
        assert_eq!(LeadSheet::from_json(&frozen).unwrap().to_json(), frozen);
    }
}

#[test]
fn filter_removes_chordless_and_static() {
    let mut corpus = Corpus::new();
    for path in fixtures() {
        let id = path.file_stem().unwrap().to_string_lossy().into_owned();
        corpus
            .push(id, parse_musicxml(&fs::read(&path).unwrap()).unwrap(), None)
            .unwrap();
    }
    let kept = corpus_filter(&corpus);
    let removed: Vec<&str> = corpus.ids().filter(|id| kept.get(id).is_none()).collect();
    assert_eq!(removed, ["11_chordless", "12_static_harmony"]);
    assert_eq!(filter_reason(&parse("11_chordless")), Some(FilterReason::NoChords));
    assert!(matches!(
        filter_reason(&parse("12_static_harmony")),
        Some(FilterReason::StaticHarmony { .. })
    ));
}

// Hand-derived expectations, independent of the frozen files.

fn events(ls: &LeadSheet) -> Vec<(u32, u32, Option<u8>)> {
    ls.melody.iter().map(|e| (e.onset, e.duration, e.pitch)).collect()
}

fn chords(ls: &LeadSheet) -> Vec<(u32, String)> {
    ls.chord_regions
        .iter()
        .map(|r| (r.onset, r.chord.text().to_string()))
        .collect()
}

#[test]
fn plain_four_four_by_hand() {
    let ls = parse("01_plain_four_four");
    assert_eq!((ls.total_frames, ls.pickup_frames), (64, 0));
    assert_eq!(ls.title, "Plain Four Four");
    let expected_pitches = [60, 64, 67, 64, 65, 69, 72, 69, 67, 71, 74, 77];
    for (i, e) in events(&ls).iter().take(12).enumerate() {
        assert_eq!(*e, (4 * i as u32, 4, Some(expected_pitches[i])));
    }
    assert_eq!(events(&ls)[12], (48, 16, Some(72)));
    assert_eq!(
        chords(&ls),
        [(0, "C".into()), (16, "F".into()), (32, "G7".into()), (48, "C".into())]
    );
}

#[test]
fn waltz_pickup_by_hand() {
    let ls = parse("02_waltz_pickup");
    // one-quarter pickup then five 3/4 bars of 12 frames
    assert_eq!((ls.pickup_frames, ls.total_frames), (4, 4 + 5 * 12));
    assert_eq!(ls.key_regions[0].key.fifths(), 1);
    assert_eq!(events(&ls)[0], (0, 4, Some(62)));
    // D7 placed one quarter after the second note of bar 4
    let c = chords(&ls);
    assert!(c.contains(&(4 + 36, "C".into())));
    assert!(c.contains(&(4 + 36 + 8, "D7".into())));
    assert_eq!(c[0], (4, "G".into()));
}

#[test]
fn ties_and_rests_by_hand() {
    let ls = parse("06_ties_and_rests");
    let e = events(&ls);
    assert_eq!(
        &e[..5],
        &[
            (0, 1, Some(72)),
            (1, 1, Some(74)),
            (2, 2, Some(76)),
            (4, 4, None),
            (8, 12, Some(79))
        ]
    );
    // F tied within bar 3 becomes one 8-frame note; the final bar is a rest
    assert!(e.contains(&(40, 8, Some(77))));
    assert_eq!(*e.last().unwrap(), (48, 16, None));
}

#[test]
fn offsets_slash_and_no_chord_by_hand() {
    let ls = parse("07_offsets_slash_nc");
    assert_eq!(ls.title, "Offsets Slash No Chord");
    let c = chords(&ls);
    assert_eq!(c[0], (0, "C".into()));
    assert_eq!(c[1], (8, "C/E".into()));
    assert_eq!(c[2], (16, "F/A".into()));
    // cursor after a quarter plus an offset of one eighth
    assert_eq!(c[3], (16 + 4 + 2, "G7".into()));
    assert_eq!(c[4], (32, "N.C.".into()));
    assert!(c.contains(&(48 + 4 + 4, "Em/G".into())));
}

#[test]
fn meters_keys_and_compound_by_hand() {
    let ls = parse("05_meter_change");
    let t: Vec<(u32, u32, u32)> = ls
        .time_regions
        .iter()
        .map(|r| (r.onset, r.time.numerator(), r.time.denominator()))
        .collect();
    assert_eq!(t, [(0, 4, 4), (16, 3, 4), (40, 4, 4)]);
    assert_eq!(ls.total_frames, 16 + 24 + 32);

    let ls = parse("04_key_change");
    let k: Vec<(u32, i32)> = ls.key_regions.iter().map(|r| (r.onset, r.key.fifths())).collect();
    assert_eq!(k, [(0, -1), (48, 2)]);
    assert_eq!(chords(&ls)[1], (16, "Bb".into()));

    let ls = parse("03_compound_six_eight");
    assert_eq!(ls.total_frames, 4 * 12);
    assert_eq!(events(&ls)[..2], [(0, 6, Some(69)), (6, 2, Some(72))]);
}

#[test]
fn backup_forward_and_ignored_elements_by_hand() {
    let ls = parse("08_backup_forward");
    assert_eq!(chords(&ls)[..2], [(0, "Am".into()), (8, "Em".into())]);
    assert_eq!(events(&ls)[2..5], [(16, 4, Some(69)), (20, 4, None), (24, 8, Some(72))]);

    let ls = parse("10_grace_lyrics_repeat");
    assert_eq!(events(&ls)[0], (0, 8, Some(73)));
    assert_eq!(ls.total_frames, 64);
}

#[test]
fn rich_qualities_by_hand() {
    let ls = parse("09_rich_qualities");
    let names: Vec<String> = chords(&ls).into_iter().map(|(_, c)| c).collect();
    assert_eq!(
        names,
        ["Bbmaj7", "Gm7", "Cm7", "F9", "Em7b5", "A7", "F#dim7", "Gsus4", "Eb6", "Cm6", "Bbadd9"]
    );
    assert_eq!(ls.chord_regions[1].onset, 8);
}
