use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chordframe::encoding::{decode_chords, encode_lossy, ChordVocab};
use chordframe::model::load_weights;
use chordframe::score::LeadSheet;
use serde_json::Value;
use tempfile::TempDir;

const TINY: [&str; 12] = [
    "--set",
    "encoder_hidden=4",
    "--set",
    "projection=4",
    "--set",
    "decoder_hidden=8",
    "--set",
    "prev_chord_embedding=4",
    "--set",
    "max_epochs=3",
    "--set",
    "batch_size=4",
];

fn chordframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chordframe"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = chordframe(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn fails(args: &[&str]) -> String {
    let out = chordframe(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/musicxml")
        .join(format!("{name}.musicxml"))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Demo corpus plus a tiny trained model.
struct Trained {
    dir: TempDir,
}

impl Trained {
    fn new(extra: &[&str]) -> Trained {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("corpus");
        ok(&["ingest", "--demo", "--out", s(&corpus)]);
        let weights = dir.path().join("model/w.ahwt");
        let mut args = vec!["train", s(&corpus), "--out", s(&weights)];
        args.extend(TINY);
        args.extend(extra);
        ok(&args);
        Trained { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }
}

#[test]
fn ingest_keeps_valid_and_reports_removals() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    fs::create_dir(&src).unwrap();
    for name in [
        "01_plain_four_four",
        "02_waltz_pickup",
        "03_compound_six_eight",
        "11_chordless",
    ] {
        fs::copy(fixture(name), src.join(format!("{name}.musicxml"))).unwrap();
    }
    let out = dir.path().join("out");
    ok(&["ingest", s(&src), "--out", s(&out)]);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["kept_count"], 3);
    assert_eq!(manifest["removed_count"], 1);
    assert_eq!(manifest["removed"][0]["id"], "11_chordless");
    assert_eq!(manifest["removed"][0]["reason"], "no chords");
    assert!(out.join("01_plain_four_four.json").exists());
    assert!(!out.join("11_chordless.json").exists());
    assert!(manifest["provenance"]["input_hashes"]["11_chordless.musicxml"].is_string());

    let sheet = LeadSheet::from_json(&fs::read_to_string(out.join("02_waltz_pickup.json")).unwrap()).unwrap();
    assert_eq!(sheet.pickup_frames, 4);
    assert!(sheet.provenance.unwrap().config_hash.len() == 64);

    let first = fs::read(out.join("manifest.json")).unwrap();
    ok(&["ingest", s(&src), "--out", s(&out)]);
    assert_eq!(fs::read(out.join("manifest.json")).unwrap(), first);
}

#[test]
fn ingest_fails_without_parseable_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    fails(&["ingest", s(&empty), "--out", s(&dir.path().join("o"))]);

    fs::write(empty.join("broken.musicxml"), "<score-partwise><part").unwrap();
    let err = fails(&["ingest", s(&empty), "--out", s(&dir.path().join("o"))]);
    assert!(err.contains("could be parsed"), "{err}");
}

#[test]
fn train_writes_weights_vocab_and_report() {
    let t = Trained::new(&[]);
    let weights = t.path("model/w.ahwt");
    let w = load_weights(&weights).unwrap();
    let vocab = ChordVocab::from_json(&fs::read_to_string(t.path("model/w.vocab.json")).unwrap()).unwrap();
    assert_eq!(w.vocab_hash, vocab.hash());
    assert_eq!(w.config.encoder_hidden, 4);

    let report = json(&t.path("model/w.report.json"));
    assert!(report["best_epoch"].as_u64().unwrap() >= 1);
    assert_eq!(report["epochs"].as_array().unwrap().len(), 3);
    assert_eq!(report["train_ids"].as_array().unwrap().len(), 9);
    assert_eq!(report["valid_ids"].as_array().unwrap().len(), 1);
    let notes = report["provenance"]["notes"][0].as_str().unwrap();
    assert!(notes.contains("\"max_epochs\":3"), "{notes}");
}

#[test]
fn train_is_deterministic_per_seed() {
    let a = Trained::new(&["--seed", "5"]);
    let b = Trained::new(&["--seed", "5"]);
    assert_eq!(
        fs::read(a.path("model/w.ahwt")).unwrap(),
        fs::read(b.path("model/w.ahwt")).unwrap()
    );
    assert_eq!(
        fs::read(a.path("model/w.report.json")).unwrap(),
        fs::read(b.path("model/w.report.json")).unwrap()
    );
}

#[test]
fn patience_zero_stops_at_first_non_improving_epoch() {
    let t = Trained::new(&[
        "--set",
        "patience=0",
        "--set",
        "max_epochs=40",
        "--set",
        "learning_rate=0.3",
    ]);
    let report = json(&t.path("model/w.report.json"));
    let losses: Vec<f64> = report["epochs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["valid_loss"].as_f64().unwrap())
        .collect();
    let best_before = |i: usize| losses[..i].iter().cloned().fold(f64::INFINITY, f64::min);
    let first_bad = (1..losses.len())
        .find(|&i| losses[i] >= best_before(i))
        .expect("a non-improving epoch within 40 epochs");
    let stopped = report["stopped_epoch"].as_u64().unwrap() as usize;
    assert_eq!(stopped, first_bad + 1);
    assert_eq!(losses.len(), stopped);
}

#[test]
fn train_fails_on_unwritable_destination() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    ok(&["ingest", "--demo", "--out", s(&corpus)]);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let mut args = vec!["train", s(&corpus)];
    let dest = blocker.join("w.ahwt");
    args.extend(["--out", s(&dest)]);
    args.extend(TINY);
    fails(&args);
}

#[test]
fn harmonize_neutral_gamma_matches_greedy_decode() {
    let t = Trained::new(&[]);
    let melody = fixture("01_plain_four_four");
    let out = t.path("gen/plain.json");
    ok(&[
        "harmonize",
        s(&melody),
        "-w",
        s(&t.path("model/w.ahwt")),
        "--gamma",
        "0.5",
        "--out",
        s(&out),
    ]);
    let generated = LeadSheet::from_json(&fs::read_to_string(&out).unwrap()).unwrap();

    // free-running argmax through the model's own forward pass
    let w = load_weights(&t.path("model/w.ahwt")).unwrap();
    let vocab = ChordVocab::from_json(&fs::read_to_string(t.path("model/w.vocab.json")).unwrap()).unwrap();
    let sheet = chordframe::ingest::parse_musicxml(&fs::read(&melody).unwrap()).unwrap();
    let (enc, _) = encode_lossy(&sheet, &vocab).unwrap();
    let probs = w.forward(&enc, None, false, 0).unwrap();
    let greedy: Vec<u32> = probs
        .iter()
        .map(|row| {
            let mut best = 0;
            for (i, p) in row.iter().enumerate() {
                if *p > row[best] {
                    best = i;
                }
            }
            best as u32
        })
        .collect();
    assert_eq!(generated.chord_regions, decode_chords(&greedy, &vocab));
    assert_eq!(generated.melody, sheet.melody);

    let density = json(&t.path("gen/plain.density.json"));
    assert_eq!(density["gamma"], 0.5);
    assert_eq!(density["bars"], 4);
    assert!(density["provenance"]["input_hashes"]["weights"].is_string());
}

#[test]
fn harmonize_validates_gamma() {
    let t = Trained::new(&[]);
    let out = t.path("gen/x.json");
    let err = fails(&[
        "harmonize",
        s(&fixture("01_plain_four_four")),
        "-w",
        s(&t.path("model/w.ahwt")),
        "--gamma",
        "1.5",
        "--out",
        s(&out),
    ]);
    assert!(err.contains("gamma"), "{err}");
    assert!(!out.exists());

    let cfg = t.path("bad.toml");
    fs::write(&cfg, "gamma = -0.1\n").unwrap();
    fails(&[
        "harmonize",
        s(&fixture("01_plain_four_four")),
        "-w",
        s(&t.path("model/w.ahwt")),
        "--config",
        s(&cfg),
        "--out",
        s(&out),
    ]);
}

#[test]
fn harmonize_sampling_is_reproducible() {
    let t = Trained::new(&[]);
    let melody = t.path("corpus/demo_003.json");
    let run = |name: &str| {
        let out = t.path(&format!("gen/{name}.json"));
        ok(&[
            "harmonize",
            s(&melody),
            "-w",
            s(&t.path("model/w.ahwt")),
            "--gamma",
            "0.8",
            "--strategy",
            "sample",
            "--temperature",
            "1.5",
            "--seed",
            "11",
            "--trace",
            "--out",
            s(&out),
        ]);
        (
            fs::read(&out).unwrap(),
            fs::read(t.path(&format!("gen/{name}.density.json"))).unwrap(),
            fs::read(t.path(&format!("gen/{name}.trace.json"))).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
    let trace = json(&t.path("gen/a.trace.json"));
    assert!(!trace["steps"].as_array().unwrap().is_empty());
}

#[test]
fn harmonize_refuses_foreign_vocabulary() {
    let t = Trained::new(&[]);
    let other = t.path("other.vocab.json");
    fs::write(&other, ChordVocab::from_symbols(["C", "G"]).unwrap().to_json()).unwrap();
    let err = fails(&[
        "harmonize",
        s(&fixture("01_plain_four_four")),
        "-w",
        s(&t.path("model/w.ahwt")),
        "--vocab",
        s(&other),
        "--out",
        s(&t.path("gen/x.json")),
    ]);
    assert!(err.contains("vocab"), "{err}");
}

#[test]
fn evaluate_identical_sets_and_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth");
    ok(&["ingest", "--demo", "--count", "4", "--out", s(&truth)]);
    let report = dir.path().join("report/r.json");
    ok(&["evaluate", s(&truth), s(&truth), "--out", s(&report)]);
    let r = json(&report);
    assert_eq!(r["aggregate"]["acc"]["mean"], 1.0);
    assert_eq!(r["aggregate"]["pieces"], 4);
    assert_eq!(r["aggregate"]["generated"]["che"], r["aggregate"]["truth"]["che"]);
    assert!(r["harmonic_rhythm_type"].as_str().unwrap().contains("bitmask"));
    let csv = fs::read_to_string(dir.path().join("report/r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("id,acc,"));

    let json_bytes = fs::read(&report).unwrap();
    let csv_bytes = fs::read(dir.path().join("report/r.csv")).unwrap();
    ok(&["evaluate", s(&truth), s(&truth), "--out", s(&report)]);
    assert_eq!(fs::read(&report).unwrap(), json_bytes);
    assert_eq!(fs::read(dir.path().join("report/r.csv")).unwrap(), csv_bytes);

    let gen = dir.path().join("gen");
    fs::create_dir(&gen).unwrap();
    for id in ["demo_000", "demo_001", "demo_002"] {
        fs::copy(truth.join(format!("{id}.json")), gen.join(format!("{id}.json"))).unwrap();
    }
    let err = fails(&["evaluate", s(&gen), s(&truth), "--out", s(&dir.path().join("x.json"))]);
    assert!(err.contains("demo_003"), "{err}");
}
