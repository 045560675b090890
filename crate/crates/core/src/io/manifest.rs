//! Run manifests: enough provenance next to every output directory to
//! re-run the producing command identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Command line as invoked.
    pub command: String,
    pub toolkit_version: String,
    pub config_path: Option<String>,
    pub input_paths: Vec<String>,
    pub output_dir: String,
    pub seed: Option<u64>,
    pub seeds: Vec<u64>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, output_dir: &Path) -> Self {
        RunManifest {
            command: command.into(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            config_path: None,
            input_paths: Vec::new(),
            output_dir: output_dir.display().to_string(),
            seed: None,
            seeds: Vec::new(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        super::write_json(&out_dir.join("manifest.json"), self)
    }
}
