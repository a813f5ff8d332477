//! Columnar tables, `%.12g` CSV rendering and run manifests with checksums.

use crate::error::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.columns.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        s.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(i) => i.to_string(),
                    Cell::Float(f) => fmt_g(*f, 12),
                    Cell::Text(t) => csv_field(t),
                    Cell::Bool(b) => b.to_string(),
                })
                .collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// C's `%.{prec}g`.
pub fn fmt_g(x: f64, prec: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = prec.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -4 || exp >= p as i32 {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in d.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct OutputChecksum {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// Subcommand path, e.g. ["experiment", "tail"].
    pub command: Vec<String>,
    /// Resolved flat configuration.
    pub config: serde_json::Map<String, serde_json::Value>,
    pub profile: String,
    pub seed: u64,
    pub outputs: Vec<OutputChecksum>,
}

/// Writes each table as `<name>.csv` and returns the checksums.
pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<Vec<OutputChecksum>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Resource(format!("cannot create {}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for t in tables {
        let csv = t.to_csv();
        let file = format!("{}.csv", t.name);
        let path = dir.join(&file);
        std::fs::write(&path, csv.as_bytes()).map_err(|e| Error::Resource(format!("cannot write {}: {e}", path.display())))?;
        out.push(OutputChecksum { file, sha256: sha256_hex(csv.as_bytes()) });
    }
    Ok(out)
}

pub fn write_manifest(dir: &Path, m: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(|e| Error::Internal(e.to_string()))?;
    let path = dir.join("manifest.json");
    std::fs::write(&path, text + "\n").map_err(|e| Error::Resource(format!("cannot write {}: {e}", path.display())))
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad manifest {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_printf() {
        // reference strings from C printf("%.12g")
        let cases = [
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (1e-5, "1e-05"),
            (0.0001, "0.0001"),
            (-2.5e-7, "-2.5e-07"),
            (100.0, "100"),
            (6.02214076e23, "6.02214076e+23"),
        ];
        for (x, s) in cases {
            assert_eq!(fmt_g(x, 12), s, "{x}");
        }
        assert_eq!(fmt_g(f64::NAN, 12), "nan");
    }

    #[test]
    fn csv_has_header_and_lf() {
        let mut t = Table::new("x", &["a", "b,c"]);
        t.push(vec![Cell::Int(1), Cell::Float(0.5)]);
        assert_eq!(t.to_csv(), "a,\"b,c\"\n1,0.5\n");
    }
}
