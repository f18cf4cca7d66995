//! Run manifests: what was run, with which parameters, and what it wrote.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::{self, OutputDir, CSV_SCHEMA_VERSION};

pub const TOOL: &str = "svtk";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// File name relative to the manifest's directory.
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// The full parsed command, defaults filled in. Feeding it back through
    /// `svtk replay` reruns the same computation.
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub csv_schema: u32,
    pub wall_time_seconds: f64,
    pub exit_code: u8,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn file_name(subcommand: &str) -> String {
        format!("{subcommand}.manifest.json")
    }

    /// Digests every file in `out` and writes the manifest beside them.
    pub fn write(
        out: &OutputDir,
        subcommand: &str,
        parameters: serde_json::Value,
        seed: Option<u64>,
        wall_time_seconds: f64,
        exit_code: u8,
    ) -> Result<RunManifest> {
        let mut outputs = Vec::new();
        for path in out.written() {
            let (sha256, bytes) = io::sha256_file(path)?;
            let file = path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default();
            outputs.push(OutputDigest { file, bytes, sha256 });
        }
        let manifest = RunManifest {
            tool: TOOL.into(),
            version: VERSION.into(),
            subcommand: subcommand.into(),
            parameters,
            seed,
            csv_schema: CSV_SCHEMA_VERSION,
            wall_time_seconds,
            exit_code,
            outputs,
        };
        io::write_json_file(&out.path(&Self::file_name(subcommand)), &manifest)?;
        Ok(manifest)
    }

    pub fn read(path: &Path) -> Result<RunManifest> {
        let text = io::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: not a run manifest: {e}", path.display())))
    }

    /// Names of outputs whose digests differ between the two manifests,
    /// including files present in only one of them.
    pub fn mismatches(&self, other: &RunManifest) -> Vec<String> {
        let mut bad = Vec::new();
        for a in &self.outputs {
            match other.outputs.iter().find(|b| b.file == a.file) {
                Some(b) if b.sha256 == a.sha256 => {}
                _ => bad.push(a.file.clone()),
            }
        }
        for b in &other.outputs {
            if !self.outputs.iter().any(|a| a.file == b.file) {
                bad.push(b.file.clone());
            }
        }
        bad
    }
}
