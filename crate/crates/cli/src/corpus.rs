use std::path::{Path, PathBuf};

use orchestrakit::smf::{parse_smf, write_smf, MidiPiece};
use serde::Serialize;

use crate::CliError;

/// Files with extension `ext` directly inside `dir`, as (stem, path) sorted
/// by stem.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<(String, PathBuf)>, CliError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(CliError::io(dir))? {
        let path = entry.map_err(CliError::io(dir))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)) {
            let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
            out.push((stem, path));
        }
    }
    out.sort();
    Ok(out)
}

/// Subdirectories of `dir`, as (name, path) sorted by name.
pub fn list_dirs(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(CliError::io(dir))? {
        let path = entry.map_err(CliError::io(dir))?.path();
        if path.is_dir() {
            out.push((path.file_name().unwrap().to_string_lossy().into_owned(), path));
        }
    }
    out.sort();
    Ok(out)
}

pub fn read_midi(path: &Path) -> Result<MidiPiece, String> {
    let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
    parse_smf(&bytes).map_err(|e| e.to_string())
}

pub fn write_midi(path: &Path, piece: &MidiPiece) -> Result<(), CliError> {
    let bytes = write_smf(piece).map_err(|e| CliError::Processing(anyhow::anyhow!("{}: {e}", path.display())))?;
    std::fs::write(path, bytes).map_err(CliError::io(path))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Processing(e.into()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(CliError::io(path))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(CliError::io(path))
}
