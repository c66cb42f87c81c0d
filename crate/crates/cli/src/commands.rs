use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chordframe::decoding::{density_report, harmonize_sheet, DensityReport, Strategy, TraceStep};
use chordframe::encoding::{encode_lossy, ChordVocab};
use chordframe::ingest::{demo_corpus, filter_reason, split_corpus, Corpus};
use chordframe::metrics::{aggregate, piece_report};
use chordframe::model::{load_weights_expecting, save_weights, TrainReport};
use chordframe::provenance::Provenance;
use chordframe::score::LeadSheet;
use log::{info, warn};
use serde::Serialize;

use crate::config::RunConfig;
use crate::files::{self, list_sheets, load_sheet, par_map, piece_id, sidecar, MANIFEST};

fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance::new()
        .with_config(cfg)
        .with_note(format!("config {}", cfg.to_json()))
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Removed {
    id: String,
    reason: String,
}

#[derive(Serialize)]
struct Manifest {
    kept_count: usize,
    removed_count: usize,
    kept: Vec<String>,
    removed: Vec<Removed>,
    provenance: Provenance,
}

struct Parsed {
    id: String,
    file: String,
    bytes: Vec<u8>,
    sheet: Result<LeadSheet>,
}

fn write_corpus(parsed: Vec<Parsed>, out: &Path, mut prov: Provenance) -> Result<Manifest> {
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for p in &parsed {
        prov = prov.with_input(p.file.clone(), &p.bytes);
    }
    for p in parsed {
        let reason = match &p.sheet {
            Err(e) => Some(format!("parse error: {e:#}")),
            Ok(sheet) => filter_reason(sheet).map(|r| r.to_string()),
        };
        if let Some(reason) = reason {
            info!("{}: removed ({reason})", p.id);
            removed.push(Removed { id: p.id, reason });
            continue;
        }
        let mut sheet = p.sheet.expect("checked");
        sheet.provenance = Some(prov_for_piece(&prov, &p.file, &p.bytes));
        files::write(&out.join(format!("{}.json", p.id)), sheet.to_json())?;
        kept.push(p.id);
    }
    let manifest = Manifest {
        kept_count: kept.len(),
        removed_count: removed.len(),
        kept,
        removed,
        provenance: prov,
    };
    files::write(&out.join(MANIFEST), to_json(&manifest))?;
    info!("kept {}, removed {}", manifest.kept_count, manifest.removed_count);
    Ok(manifest)
}

fn prov_for_piece(run: &Provenance, file: &str, bytes: &[u8]) -> Provenance {
    Provenance {
        input_hashes: BTreeMap::new(),
        ..run.clone()
    }
    .with_input(file, bytes)
}

pub fn ingest(src: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let paths = list_sheets(src)?;
    if paths.is_empty() {
        bail!("no MusicXML or JSON lead sheets in {}", src.display());
    }
    let parsed: Vec<Parsed> = par_map(&paths, |path| {
        let bytes = files::read(path);
        let file = path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default();
        match bytes {
            Ok(bytes) => Parsed {
                id: piece_id(path),
                file,
                sheet: files::parse_sheet(path, &bytes),
                bytes,
            },
            Err(e) => Parsed {
                id: piece_id(path),
                file,
                sheet: Err(e),
                bytes: Vec::new(),
            },
        }
    });
    let mut seen = BTreeMap::new();
    for p in &parsed {
        if let Some(prev) = seen.insert(p.id.as_str(), p.file.as_str()) {
            bail!("files {prev} and {} share the piece id `{}`", p.file, p.id);
        }
    }
    let ok = parsed.iter().filter(|p| p.sheet.is_ok()).count();
    if ok == 0 {
        for p in &parsed {
            if let Err(e) = &p.sheet {
                warn!("{}: {e:#}", p.file);
            }
        }
        bail!(
            "none of the {} file(s) in {} could be parsed",
            parsed.len(),
            src.display()
        );
    }
    let prov = provenance(cfg).with_note("MusicXML repeats and endings are read in written order, not unrolled");
    write_corpus(parsed, out, prov)?;
    Ok(())
}

pub fn ingest_demo(count: usize, out: &Path, cfg: &RunConfig) -> Result<()> {
    if count == 0 {
        bail!("--count must be positive");
    }
    let corpus = demo_corpus(count, cfg.model.seed);
    let parsed = corpus
        .pieces()
        .iter()
        .map(|(id, sheet)| Parsed {
            id: id.clone(),
            file: format!("{id}.json"),
            bytes: sheet.to_json().into_bytes(),
            sheet: Ok(sheet.clone()),
        })
        .collect();
    let prov = provenance(cfg).with_note(format!(
        "synthetic demo corpus, {count} pieces, seed {}",
        cfg.model.seed
    ));
    write_corpus(parsed, out, prov)?;
    Ok(())
}

/// File names and contents of the loaded pieces.
type Inputs = Vec<(String, Vec<u8>)>;

fn load_corpus(dir: &Path) -> Result<(Corpus, Inputs)> {
    let mut corpus = Corpus::new();
    let mut inputs = Vec::new();
    for path in list_sheets(dir)? {
        let (sheet, bytes) = load_sheet(&path)?;
        let id = piece_id(&path);
        corpus.push(id, sheet, Some(path.clone()))?;
        inputs.push((path.file_name().unwrap().to_string_lossy().into_owned(), bytes));
    }
    Ok((corpus, inputs))
}

#[derive(Serialize)]
struct TrainArtifact<'a> {
    #[serde(flatten)]
    report: &'a TrainReport,
    train_ids: Vec<&'a str>,
    valid_ids: Vec<&'a str>,
    weights_sha256: String,
    provenance: Provenance,
}

pub fn train(corpus_dir: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let (corpus, inputs) = load_corpus(corpus_dir)?;
    if corpus.len() < 2 {
        bail!(
            "training needs at least 2 pieces, found {} in {}",
            corpus.len(),
            corpus_dir.display()
        );
    }
    // fail on an unwritable destination before spending time on training
    files::write(out, []).context("weights destination is not writable")?;
    let (train_set, valid_set) = split_corpus(&corpus, cfg.train_fraction, cfg.model.seed)?;
    info!(
        "training on {} pieces, validating on {}",
        train_set.len(),
        valid_set.len()
    );
    let outcome = match chordframe::model::train(&train_set, &valid_set, &cfg.model) {
        Ok(o) => o,
        Err(e) => {
            let _ = std::fs::remove_file(out);
            return Err(e.into());
        }
    };
    save_weights(&outcome.weights, out)?;
    files::write(&files::vocab_path(out), outcome.vocab.to_json())?;
    let mut prov = provenance(cfg);
    for (name, bytes) in &inputs {
        prov = prov.with_input(name.clone(), bytes);
    }
    let artifact = TrainArtifact {
        report: &outcome.report,
        train_ids: train_set.ids().collect(),
        valid_ids: valid_set.ids().collect(),
        weights_sha256: chordframe::provenance::sha256_hex(&files::read(out)?),
        provenance: prov,
    };
    files::write(&sidecar(out, "report.json"), to_json(&artifact))?;
    info!(
        "best epoch {} (valid loss {:.4}); weights at {}",
        outcome.report.best_epoch,
        outcome.report.best_valid_loss,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct DensitySidecar {
    gamma: f64,
    strategy: Strategy,
    skipped_steps: usize,
    #[serde(flatten)]
    density: DensityReport,
    provenance: Provenance,
}

#[derive(Serialize)]
struct TraceSidecar<'a> {
    steps: &'a [TraceStep],
    provenance: Provenance,
}

pub fn harmonize(melody: &Path, weights: &Path, vocab: &Path, out: &Path, trace: bool, cfg: &RunConfig) -> Result<()> {
    let (sheet, melody_bytes) = load_sheet(melody)?;
    let vocab_bytes = files::read(vocab)?;
    let vocab = ChordVocab::from_json(std::str::from_utf8(&vocab_bytes)?)
        .with_context(|| format!("parsing vocabulary {}", vocab.display()))?;
    let w = load_weights_expecting(weights, vocab.hash())
        .with_context(|| format!("loading {} with vocabulary {}", weights.display(), vocab.hash_hex()))?;
    let (mut generated, generation) = harmonize_sheet(&w, &vocab, &sheet, cfg.gamma_control(), cfg.strategy())?;
    if generation.skipped_steps > 0 {
        warn!(
            "{} step(s) left unscaled: attribute mass was 0 or 1",
            generation.skipped_steps
        );
    }
    let prov = provenance(cfg)
        .with_input("melody", &melody_bytes)
        .with_input("weights", &files::read(weights)?)
        .with_input("vocab", &vocab_bytes);
    let (enc, _) = encode_lossy(&sheet, &vocab)?;
    let density = DensitySidecar {
        gamma: cfg.gamma,
        strategy: cfg.strategy(),
        skipped_steps: generation.skipped_steps,
        density: density_report(&generation.chords, &enc),
        provenance: prov.clone(),
    };
    generated.provenance = Some(prov.clone());
    files::write(out, generated.to_json())?;
    files::write(&sidecar(out, "density.json"), to_json(&density))?;
    if trace {
        let t = TraceSidecar {
            steps: &generation.trace,
            provenance: prov,
        };
        files::write(&sidecar(out, "trace.json"), to_json(&t))?;
    }
    info!(
        "{} chord onset(s) over {} bar(s) written to {}",
        density.density.onsets,
        density.density.bars,
        out.display()
    );
    Ok(())
}

fn index_dir(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for path in list_sheets(dir)? {
        if let Some(prev) = out.insert(piece_id(&path), path.clone()) {
            bail!("{} and {} share a piece id", prev.display(), path.display());
        }
    }
    Ok(out)
}

pub fn evaluate(generated_dir: &Path, truth_dir: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let gen = index_dir(generated_dir)?;
    let truth = index_dir(truth_dir)?;
    let only_gen: Vec<&str> = gen
        .keys()
        .filter(|k| !truth.contains_key(*k))
        .map(|s| s.as_str())
        .collect();
    let only_truth: Vec<&str> = truth
        .keys()
        .filter(|k| !gen.contains_key(*k))
        .map(|s| s.as_str())
        .collect();
    if !only_gen.is_empty() || !only_truth.is_empty() {
        bail!(
            "unmatched piece ids; generated only: [{}]; truth only: [{}]",
            only_gen.join(", "),
            only_truth.join(", ")
        );
    }
    if gen.is_empty() {
        bail!("no lead sheets in {}", generated_dir.display());
    }
    let ids: Vec<&String> = gen.keys().collect();
    let scored = par_map(&ids, |id| -> Result<_> {
        let (g, g_bytes) = load_sheet(&gen[*id])?;
        let (t, t_bytes) = load_sheet(&truth[*id])?;
        let report = piece_report(id, &g, &t)?;
        Ok((report, g_bytes, t_bytes))
    });
    let mut prov = provenance(cfg);
    let mut pieces = Vec::with_capacity(ids.len());
    for (id, item) in ids.iter().zip(scored) {
        let (report, g_bytes, t_bytes) = item?;
        prov = prov
            .with_input(format!("generated/{id}"), &g_bytes)
            .with_input(format!("truth/{id}"), &t_bytes);
        pieces.push(report);
    }
    let mut report = aggregate(pieces)?;
    report.provenance = Some(prov);
    files::write(out, report.to_json())?;

    let (header, rows) = report.csv_table();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    files::write(&sidecar(out, "csv"), w.into_inner()?)?;
    if let Some(acc) = report.aggregate.acc.mean {
        info!("{} piece(s), mean frame accuracy {acc:.4}", report.aggregate.pieces);
    }
    Ok(())
}
