//! On-disk artifact formats: field dumps, CSV series, hashing and the run
//! manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{KmlError, Result};
use crate::grid::{Grid, PeriodicField};

pub const FIELD_HEADER: [&str; 3] = ["theta1", "theta2", "value"];
pub const MANIFEST_FILE: &str = "manifest.json";

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serialize a field row-major over the grid with header "theta1,theta2,value".
pub fn field_csv(field: &PeriodicField) -> Result<Vec<u8>> {
    let grid = field.grid();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FIELD_HEADER)?;
    for (idx, v) in field.values().iter().enumerate() {
        let (x, y) = grid.point(idx);
        w.write_record([fmt_f64(x), fmt_f64(y), fmt_f64(*v)])?;
    }
    w.into_inner().map_err(|e| KmlError::Io(e.into_error()))
}

/// Parse a field dump onto `grid`, checking the header, the row count and
/// that each row sits on the expected node.
pub fn read_field_csv(bytes: &[u8], grid: &Grid) -> Result<PeriodicField> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != FIELD_HEADER {
        return Err(KmlError::input(format!(
            "field file header must be theta1,theta2,value, got {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(KmlError::input(format!(
                "field row {} has {} columns",
                row + 1,
                rec.len()
            )));
        }
        let parse = |k: usize| -> Result<f64> {
            rec[k].trim().parse::<f64>().map_err(|_| {
                KmlError::input(format!(
                    "field row {}, column {}: cannot parse {:?}",
                    row + 1,
                    FIELD_HEADER[k],
                    &rec[k]
                ))
            })
        };
        if row >= grid.len() {
            return Err(KmlError::input(format!(
                "field file has more than {} rows",
                grid.len()
            )));
        }
        let (x, y) = grid.point(row);
        let (fx, fy) = (parse(0)?, parse(1)?);
        if (fx - x).abs() > 1e-9 || (fy - y).abs() > 1e-9 {
            return Err(KmlError::input(format!(
                "field row {} sits at ({fx}, {fy}), expected grid node ({x}, {y})",
                row + 1
            )));
        }
        values.push(parse(2)?);
    }
    if values.len() != grid.len() {
        return Err(KmlError::input(format!(
            "field file has {} rows, grid needs {}",
            values.len(),
            grid.len()
        )));
    }
    grid.field(values)
}

/// Rows of a CSV table with a fixed header.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| KmlError::Io(e.into_error()))
}

/// Parse a numeric CSV table, requiring the given header. Empty cells read as NaN.
pub fn read_table(bytes: &[u8], header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_reader(bytes);
    let got = r.headers()?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(KmlError::input(format!(
            "expected columns {}, got {}",
            header.join(","),
            got.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals = rec
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if c.is_empty() {
                    Ok(f64::NAN)
                } else {
                    c.trim().parse::<f64>().map_err(|_| {
                        KmlError::input(format!(
                            "row {}, column {}: cannot parse {c:?}",
                            row + 1,
                            header[k]
                        ))
                    })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(vals);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub version: String,
    pub command: String,
    pub arguments: Vec<String>,
    pub files: Vec<ManifestEntry>,
    pub wall_time_seconds: f64,
}

/// Collects artifact files under one output directory and records them
/// for the manifest.
pub struct ArtifactWriter {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl ArtifactWriter {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Write `bytes` to the relative path `rel` (forward slashes).
    pub fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut f = fs::File::create(&path)?;
        f.write_all(bytes)?;
        self.entries.push(ManifestEntry {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn put_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.put(rel, &bytes)
    }

    pub fn finish(
        self,
        config_sha256: String,
        command: &str,
        arguments: Vec<String>,
        wall_time_seconds: f64,
    ) -> Result<RunManifest> {
        let manifest = RunManifest {
            config_sha256,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            arguments,
            files: self.entries,
            wall_time_seconds,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(self.root.join(MANIFEST_FILE), bytes)?;
        Ok(manifest)
    }
}
