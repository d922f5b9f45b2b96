//! CSV files with a one-line JSON metadata header, and the aligned text view
//! built from them.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;

pub const TABLES_FILE: &str = "tables.txt";
pub const INDEX_FILE: &str = "index.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Round-trippable float text; empty for NaN.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x != 0.0 && x.is_finite() && (x.abs() < 1e-4 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
    pub engines: Vec<String>,
    pub reps: usize,
    pub horizon_s: Option<f64>,
    pub sweep_param: Option<String>,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

pub fn render_csv(meta: &Metadata, table: &Table) -> String {
    let mut out = String::new();
    out.push_str("# ");
    out.push_str(&serde_json::to_string(meta).expect("metadata serializes"));
    out.push('\n');
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn read_csv(path: &Path) -> Result<(Metadata, Table), ExperimentError> {
    let text = fs::read_to_string(path)?;
    let missing = |what: &str| ExperimentError::MissingData(format!("{}: {what}", path.display()));
    let mut lines = text.lines();
    let meta_line = lines.next().ok_or_else(|| missing("empty file"))?;
    let meta_json = meta_line
        .strip_prefix("# ")
        .ok_or_else(|| missing("no metadata header"))?;
    let meta: Metadata =
        serde_json::from_str(meta_json).map_err(|e| missing(&format!("bad metadata: {e}")))?;
    let header = lines.next().ok_or_else(|| missing("no column header"))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((meta, Table { columns, rows }))
}

fn aligned(table: &Table) -> String {
    let mut widths: Vec<usize> = table.columns.iter().map(|c| c.len()).collect();
    for row in &table.rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&table.columns);
    out.push('\n');
    out.push_str(
        &widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("  "),
    );
    out.push('\n');
    for row in &table.rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
    pub rows: usize,
    pub columns: Vec<String>,
}

/// Aligned text tables plus a JSON index for every result CSV in `dir`.
pub fn render_tables(dir: &Path) -> Result<String, ExperimentError> {
    let mut csvs: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect(),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    csvs.sort();
    if csvs.is_empty() {
        return Err(ExperimentError::MissingData(format!(
            "no result files in {}",
            dir.display()
        )));
    }
    let mut summary = String::new();
    let mut index = Vec::new();
    for path in &csvs {
        let (meta, table) = read_csv(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        summary.push_str(&format!(
            "{name} ({}, seed {}, config {})\n",
            meta.experiment,
            meta.seed,
            &meta.config_sha256[..meta.config_sha256.len().min(12)]
        ));
        summary.push_str(&aligned(&table));
        summary.push('\n');
        index.push(IndexEntry {
            file: name,
            experiment: meta.experiment,
            config_sha256: meta.config_sha256,
            seed: meta.seed,
            rows: table.rows.len(),
            columns: table.columns,
        });
    }
    write_atomic(&dir.join(TABLES_FILE), &summary)?;
    let mut json = serde_json::to_string_pretty(&index).expect("index serializes");
    json.push('\n');
    write_atomic(&dir.join(INDEX_FILE), &json)?;
    Ok(summary)
}
