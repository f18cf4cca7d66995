//! Output files: CSV for fields and curves, JSON for reports and models.
//!
//! Every CSV has a fixed header given by [`CsvRow::HEADER`]. Floats are
//! written in shortest round-trip decimal form, so parsing a file back gives
//! the exact values that were computed.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Bumped whenever a header or column meaning changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// A CSV record type. Serialized field order must match `HEADER`.
pub trait CsvRow: Serialize {
    const HEADER: &'static [&'static str];
}

/// Directory that collects the files of one run.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(OutputDir { root, written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Files written so far, in order.
    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_csv<R: CsvRow>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<PathBuf> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
        let csv_err = |e: csv::Error| CliError::io(&path, std::io::Error::other(e));
        w.write_record(R::HEADER).map_err(csv_err)?;
        for row in rows {
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name);
        write_json_file(&path, value)?;
        self.written.push(path.clone());
        Ok(path)
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json_file<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e.into()))?;
    text.push('\n');
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    let mut s = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| CliError::io(path, e))?;
    Ok(s)
}

/// Lowercase hex SHA-256 of a file and its length in bytes.
pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}
