//! Result directory: CSV tables, JSON summary, manifest written last.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const MANIFEST: &str = "manifest.json";
pub const SUMMARY: &str = "summary.json";
pub const ERROR_RECORD: &str = "error.json";

/// Seventeen significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl Status {
    pub fn worst(self, other: Status) -> Status {
        self.max(other)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// `columns` pairs a header with its description.
    pub fn new(name: &str, columns: &[(&'static str, &'static str)]) -> Self {
        Table { name: name.to_string(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.0))?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| io::Error::other(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_echo: ExperimentConfig,
    pub artifact_version: String,
    pub timestamp: String,
    /// File name to lowercase hex SHA-256.
    pub checksums: BTreeMap<String, String>,
    pub diagnostics: BTreeMap<String, Status>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct OutputDir {
    root: PathBuf,
    checksums: BTreeMap<String, String>,
}

impl OutputDir {
    /// Creates the directory and removes any previous manifest and error record.
    pub fn prepare(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        let manifest = root.join(MANIFEST);
        if manifest.exists() {
            fs::remove_file(manifest)?;
        }
        let error = root.join(ERROR_RECORD);
        if error.exists() {
            fs::remove_file(error)?;
        }
        Ok(OutputDir { root: root.to_path_buf(), checksums: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        fs::write(self.root.join(name), bytes)?;
        self.checksums.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_table(&mut self, table: &Table) -> io::Result<()> {
        self.write_bytes(&table.file_name(), &table.to_csv()?)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Error record for a failed run; no manifest follows.
    pub fn write_error(&self, message: &str) -> io::Result<()> {
        let body = serde_json::json!({ "error": message });
        fs::write(self.root.join(ERROR_RECORD), serde_json::to_vec_pretty(&body).map_err(io::Error::other)?)
    }

    pub fn finish(self, config: &ExperimentConfig, diagnostics: BTreeMap<String, Status>) -> io::Result<RunManifest> {
        let manifest = RunManifest {
            config_echo: config.clone(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            checksums: self.checksums,
            diagnostics,
        };
        let bytes = serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?;
        let tmp = self.root.join(format!("{MANIFEST}.tmp"));
        fs::write(&tmp, bytes)?;
        fs::rename(tmp, self.root.join(MANIFEST))?;
        Ok(manifest)
    }
}

/// Recomputes every checksum listed in a manifest; returns mismatching files.
pub fn verify_manifest(root: &Path) -> io::Result<Vec<String>> {
    let manifest: RunManifest = serde_json::from_slice(&fs::read(root.join(MANIFEST))?).map_err(io::Error::other)?;
    let mut bad = Vec::new();
    for (name, sum) in &manifest.checksums {
        match fs::read(root.join(name)) {
            Ok(bytes) if sha256_hex(&bytes) == *sum => {}
            _ => bad.push(name.clone()),
        }
    }
    Ok(bad)
}
