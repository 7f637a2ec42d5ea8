//! JSON, CSV, binary sidecar and manifest writers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fracsol_core::ground_state::GroundState;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};
use crate::records::SCHEMA_VERSION;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Writes `bytes` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| HarnessError::io(path, e))?;
    tmp.persist(path).map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

/// One JSON object with a `schema_version` field.
pub fn write_json<T: Serialize>(path: &Path, record: &T) -> Result<()> {
    let value = serde_json::to_value(record).map_err(|e| HarnessError::Numerical(e.to_string()))?;
    match &value {
        Value::Object(map) if map.contains_key("schema_version") => {}
        _ => return Err(HarnessError::Numerical("record is not an object with schema_version".into())),
    }
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| HarnessError::Numerical(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match *self {
            Cell::Real(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Real(v) if v.is_nan() => "nan".into(),
            Cell::Real(v) => if v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Int(v) => v.to_string(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Real)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

/// Header row plus one row per record; reals with 17 significant digits.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    if rows.is_empty() {
        return Err(HarnessError::NothingToWrite);
    }
    let io = |e: csv::Error| HarnessError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(HarnessError::Numerical(format!(
                "{}: row has {} cells for {} columns",
                path.display(),
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(Cell::render)).map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub const SIDECAR_MAGIC: &[u8; 4] = b"FRGS";
pub const SIDECAR_VERSION: u32 = 1;
pub const SIDECAR_HEADER_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidecarHeader {
    pub version: u32,
    pub dims: u32,
    pub points: u32,
    pub half_width: f64,
    pub s: f64,
    pub p: f64,
}

/// Header layout (little endian): magic, version `u32`, `N` `u32`, `M`
/// `u32`, `L` `f64`, `s` `f64`, `p` `f64`, zero padding to 64 bytes.
/// The field follows as `M^N` `f64` values, axis 0 slowest.
pub fn write_sidecar(path: &Path, gs: &GroundState) -> Result<()> {
    let g = gs.grid();
    let mut bytes = Vec::with_capacity(SIDECAR_HEADER_LEN + 8 * g.len());
    bytes.extend_from_slice(SIDECAR_MAGIC);
    bytes.extend_from_slice(&SIDECAR_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(g.dims() as u32).to_le_bytes());
    bytes.extend_from_slice(&(g.points() as u32).to_le_bytes());
    for v in [g.half_width(), gs.problem.s, gs.problem.p] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.resize(SIDECAR_HEADER_LEN, 0);
    for v in gs.u.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

pub fn read_sidecar(path: &Path) -> Result<(SidecarHeader, Vec<f64>)> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    let bad = |msg: &str| HarnessError::Numerical(format!("{}: {msg}", path.display()));
    if bytes.len() < SIDECAR_HEADER_LEN || &bytes[..4] != SIDECAR_MAGIC {
        return Err(bad("not a FRGS sidecar"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let header = SidecarHeader {
        version: u32_at(4),
        dims: u32_at(8),
        points: u32_at(12),
        half_width: f64_at(16),
        s: f64_at(24),
        p: f64_at(32),
    };
    let count = (header.points as usize).pow(header.dims);
    if bytes.len() != SIDECAR_HEADER_LEN + 8 * count {
        return Err(bad("length does not match the header"));
    }
    let values = bytes[SIDECAR_HEADER_LEN..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, values))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| HarnessError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

pub fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStatus {
    pub name: String,
    /// `ok`, `failed` or `error`.
    pub status: String,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub artifact_version: String,
    pub command: String,
    pub config: BTreeMap<String, Value>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub tasks: Vec<TaskStatus>,
    pub outputs: Vec<OutputEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl Manifest {
    pub fn new(command: &str, config: BTreeMap<String, Value>) -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION.into(),
            artifact_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            started_unix: unix_seconds(),
            finished_unix: 0.0,
            tasks: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Checksums `files` (relative to `dir`) and writes the manifest
    /// atomically.
    pub fn finish(mut self, dir: &Path, files: &[PathBuf]) -> Result<Manifest> {
        self.outputs = inventory(dir, files)?;
        self.finished_unix = unix_seconds();
        let mut text = serde_json::to_string_pretty(&self).map_err(|e| HarnessError::Numerical(e.to_string()))?;
        text.push('\n');
        write_atomic(&dir.join(MANIFEST_NAME), text.as_bytes())?;
        Ok(self)
    }

    pub fn checksums(&self) -> BTreeMap<String, String> {
        self.outputs.iter().map(|o| (o.path.clone(), o.sha256.clone())).collect()
    }
}

pub fn inventory(dir: &Path, files: &[PathBuf]) -> Result<Vec<OutputEntry>> {
    let mut out = Vec::with_capacity(files.len());
    for rel in files {
        let path = dir.join(rel);
        let bytes = std::fs::metadata(&path).map_err(|e| HarnessError::io(&path, e))?.len();
        out.push(OutputEntry { path: rel.to_string_lossy().into_owned(), bytes, sha256: sha256_file(&path)? });
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_seventeen_digits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &["a", "b", "c"], &[vec![0.1.into(), 3usize.into(), None.into()]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b,c\n1.0000000000000001e-1,3,\n");
        let back: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn empty_csv_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let err = write_csv(&dir.path().join("t.csv"), &["a"], &[]).unwrap_err();
        assert_eq!(err.to_string(), "nothing to write");
    }

    #[test]
    fn json_requires_schema_version() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_json(&dir.path().join("x.json"), &serde_json::json!({"a": 1})).is_err());
        write_json(&dir.path().join("y.json"), &serde_json::json!({"schema_version": "1"})).unwrap();
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
