//! CSV tables, atomic file writes and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A table of rows under a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Collects the files of one run inside its output directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.write_bytes(name, &table.to_bytes())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(name), bytes)?;
        self.files.push(OutputFile { name: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    /// Configuration as read from the file, if any.
    pub config_file: Option<serde_json::Value>,
    /// Every parameter as used by the run, defaults included.
    pub resolved: serde_json::Value,
    /// Values set by flags over the file or defaults, with their source.
    pub overrides: Vec<String>,
    /// Summary values computed by the run.
    pub results: serde_json::Value,
    pub wall_clock_seconds: f64,
    pub files: Vec<OutputFile>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl Manifest {
    /// Writes the manifest last, after all listed files.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Numerical(e.to_string()))?;
        text.push('\n');
        write_atomic(&dir.join(MANIFEST_NAME), text.as_bytes())
    }
}

/// Recomputes the digests listed in `dir/manifest.json`; returns the names
/// that are missing or do not match.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut bad = Vec::new();
    for f in value["files"].as_array().into_iter().flatten() {
        let name = f["name"].as_str().unwrap_or_default();
        match fs::read(dir.join(name)) {
            Ok(bytes) if f["sha256"].as_str() == Some(sha256_hex(&bytes).as_str()) => {}
            _ => bad.push(name.to_string()),
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn table_bytes() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1".into(), fmt_f64(2.0)]);
        assert_eq!(t.to_bytes(), b"a,b\n1,2.0000000000000000e0\n");
    }

    #[test]
    fn manifest_digests_verify() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_bytes("x.csv", b"a\n1\n").unwrap();
        let m = Manifest {
            experiment: "modes".into(),
            version: "0".into(),
            seed: 1,
            threads: 1,
            config_file: None,
            resolved: serde_json::json!({}),
            overrides: vec![],
            results: serde_json::json!({}),
            wall_clock_seconds: 0.0,
            files: out.files().to_vec(),
        };
        m.write(dir.path()).unwrap();
        assert!(verify_manifest(dir.path()).unwrap().is_empty());
        fs::write(dir.path().join("x.csv"), b"a\n2\n").unwrap();
        assert_eq!(verify_manifest(dir.path()).unwrap(), vec!["x.csv"]);
    }
}
