use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{bail, Context, Result};
use chordframe::ingest::parse_musicxml;
use chordframe::score::{validate_leadsheet, LeadSheet};

/// File names in a lead-sheet directory that are not lead sheets.
const SIDECAR_SUFFIXES: [&str; 4] = [".density.json", ".trace.json", ".vocab.json", ".report.json"];
pub const MANIFEST: &str = "manifest.json";

/// `dir/stem.ext` becomes `dir/stem.<suffix>`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

pub fn vocab_path(weights: &Path) -> PathBuf {
    sidecar(weights, "vocab.json")
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SheetFormat {
    MusicXml,
    Json,
}

pub fn sheet_format(path: &Path) -> Option<SheetFormat> {
    let name = path.file_name()?.to_str()?;
    if name == MANIFEST || SIDECAR_SUFFIXES.iter().any(|s| name.ends_with(s)) {
        return None;
    }
    match path.extension()?.to_str()? {
        "xml" | "musicxml" => Some(SheetFormat::MusicXml),
        "json" => Some(SheetFormat::Json),
        _ => None,
    }
}

/// Piece id of a lead-sheet file: its name without the extension.
pub fn piece_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Lead-sheet files of a directory, sorted by name.
pub fn list_sheets(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && sheet_format(&path).is_some() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn parse_sheet(path: &Path, bytes: &[u8]) -> Result<LeadSheet> {
    let sheet = match sheet_format(path) {
        Some(SheetFormat::MusicXml) => parse_musicxml(bytes)?,
        Some(SheetFormat::Json) => {
            let sheet = LeadSheet::from_json(std::str::from_utf8(bytes)?)?;
            if let Some(v) = validate_leadsheet(&sheet).first() {
                bail!("invalid lead sheet: {v:?}");
            }
            sheet
        }
        None => bail!("unsupported file type"),
    };
    Ok(sheet)
}

pub fn load_sheet(path: &Path) -> Result<(LeadSheet, Vec<u8>)> {
    let bytes = read(path)?;
    let sheet = parse_sheet(path, &bytes).with_context(|| format!("parsing {}", path.display()))?;
    Ok((sheet, bytes))
}

/// Maps `f` over `items` on scoped worker threads, keeping input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(items.len().max(1));
    let chunk = items.len().div_ceil(workers).max(1);
    let f = &f;
    thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}
