//! File formats of the batch front end: 32-bit float WAV waveforms, JSON
//! config/ground-truth/layout documents, and tidy CSV outputs. All writers
//! go through a temp-file-plus-rename so consumers never see partial files.

pub mod annotations;
pub mod config;
pub mod manifest;
pub mod series_csv;
pub mod wav;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp-partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialize a value as pretty JSON to `path`, atomically.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::data(format!("serializing {}: {e}", path.display())))?;
    atomic_write(path, text.as_bytes())
}

/// Deserialize a JSON file, mapping failures to data errors.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::data(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("parsing {}: {e}", path.display())))
}
