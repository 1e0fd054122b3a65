//! Tabular output, run manifests and atomic file writes.
//!
//! Floats are rendered as `{:.16e}` (17 significant digits), which parses
//! back to the identical double. Missing values are an empty CSV field or
//! JSON `null`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::position::{SpinView, TwoComponentWavefunction};
use crate::sweep::{BoundaryPoint, ConvergencePoint, CouplingPoint, SweepManifest, SweepResult};

pub const MANIFEST_NAME: &str = "manifest.json";

pub const PARITY_HEADER: [&str; 12] = [
    "g",
    "g_over_gc",
    "level",
    "energy",
    "energy_shifted",
    "parity",
    "pair_index",
    "pair_gap_shifted",
    "pair_parity_sum",
    "p_even",
    "p_odd",
    "sentinel",
];
pub const SPECTRUM_HEADER: [&str; 9] = [
    "g",
    "g_over_gc",
    "level",
    "energy",
    "energy_shifted",
    "parity",
    "degenerate",
    "residual",
    "sentinel",
];
pub const WAVEFUNCTION_HEADER: [&str; 3] = ["xi", "psi_plus", "psi_minus"];
pub const STATES_HEADER: [&str; 7] = [
    "level",
    "energy",
    "energy_shifted",
    "parity",
    "symmetry_defect",
    "p_even",
    "p_odd",
];
pub const CONVERGENCE_HEADER: [&str; 7] = [
    "g",
    "g_over_gc",
    "n_trunc",
    "level",
    "energy",
    "reference_energy",
    "abs_diff",
];
pub const PHASE_HEADER: [&str; 8] = [
    "delta",
    "g_c",
    "pair_index",
    "status",
    "onset_g",
    "onset_g_over_gc",
    "resolution",
    "transition_g_over_gc",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Float(x) => serde_json::Number::from_f64(*x)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Cell::Int(n) => (*n).into(),
            Cell::Bool(b) => (*b).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn sentinel_label(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// An array of objects keyed by the header.
    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .header
                    .iter()
                    .cloned()
                    .zip(row.iter().map(Cell::json))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// A CSV file read back as strings.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvData {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvData {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Config("empty CSV".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let rows = lines
            .enumerate()
            .map(|(i, line)| {
                let fields: Vec<String> = line.split(',').map(str::to_string).collect();
                if fields.len() != header.len() {
                    return Err(Error::Config(format!("CSV row {} has {} fields", i + 1, fields.len())));
                }
                Ok(fields)
            })
            .collect::<Result<_>>()?;
        Ok(CsvData { header, rows })
    }

    /// Numeric column; empty fields become `None`.
    pub fn f64_column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let idx = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("no column {name:?}")))?;
        self.rows
            .iter()
            .map(|row| {
                let field = &row[idx];
                if field.is_empty() {
                    Ok(None)
                } else {
                    field
                        .parse()
                        .map(Some)
                        .map_err(|_| Error::Config(format!("malformed number {field:?} in column {name}")))
                }
            })
            .collect()
    }
}

pub fn parity_table(result: &SweepResult<CouplingPoint>) -> Table {
    let mut table = Table::new(&PARITY_HEADER);
    for p in &result.points {
        for level in 0..p.energies.len() {
            let pair = p.pairs.get(level / 2);
            table.push(vec![
                p.g.into(),
                p.g_over_gc.into(),
                level.into(),
                p.energies[level].into(),
                p.shifted_energies[level].into(),
                p.parities[level].into(),
                (level / 2).into(),
                pair.map(|r| r.gap_shifted).into(),
                pair.map(|r| r.subspace_trace).into(),
                p.p_even[level].into(),
                p.p_odd[level].into(),
                sentinel_label(p.sentinel.passed).into(),
            ]);
        }
    }
    table
}

/// Spectrum rows for the first `levels` states of each point.
pub fn spectrum_table(result: &SweepResult<CouplingPoint>, levels: usize) -> Table {
    let mut table = Table::new(&SPECTRUM_HEADER);
    for p in &result.points {
        for level in 0..levels.min(p.energies.len()) {
            table.push(vec![
                p.g.into(),
                p.g_over_gc.into(),
                level.into(),
                p.energies[level].into(),
                p.shifted_energies[level].into(),
                p.parities[level].into(),
                p.degenerate[level].into(),
                p.residuals[level].into(),
                sentinel_label(p.sentinel.passed).into(),
            ]);
        }
    }
    table
}

pub fn convergence_table(result: &SweepResult<ConvergencePoint>) -> Table {
    let mut table = Table::new(&CONVERGENCE_HEADER);
    for p in &result.points {
        table.push(vec![
            p.g.into(),
            p.g_over_gc.into(),
            p.n_trunc.into(),
            p.level.into(),
            p.energy.into(),
            p.reference_energy.into(),
            p.abs_diff.into(),
        ]);
    }
    table
}

pub fn phase_table(result: &SweepResult<BoundaryPoint>) -> Table {
    let mut table = Table::new(&PHASE_HEADER);
    for p in &result.points {
        table.push(vec![
            p.delta.into(),
            p.g_c.into(),
            p.pair_index.into(),
            p.status.as_str().into(),
            p.onset.map(|o| o.g).into(),
            p.onset.map(|o| o.g_over_gc).into(),
            p.onset.map(|o| o.resolution).into(),
            p.transition_g_over_gc.into(),
        ]);
    }
    table
}

/// Columns are `ψ₊, ψ₋` in the `σx` view and `ψ_↑, ψ_↓` in the `σz` view.
pub fn wavefunction_table(wf: &TwoComponentWavefunction, view: SpinView) -> Table {
    let (a, b) = wf.components(view);
    let mut table = Table::new(&WAVEFUNCTION_HEADER);
    for (i, (a, b)) in a.into_iter().zip(b).enumerate() {
        table.push(vec![wf.grid.xi(i).into(), a.into(), b.into()]);
    }
    table
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub residual: f64,
    pub orthonormality: f64,
    pub degeneracy: f64,
    pub sentinel_tail: f64,
    pub eps_par: f64,
}

/// Sentinel outcome at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointStatus {
    pub coordinates: BTreeMap<String, f64>,
    pub sentinel_passed: bool,
    pub max_tail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Resolved configuration; accepted back by `--config`.
    pub config: serde_json::Value,
    pub provenance: BTreeMap<String, String>,
    pub tolerances: Tolerances,
    pub wall_time_s: f64,
    pub sweep: Option<SweepManifest>,
    pub points: Vec<PointStatus>,
    pub files: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `dir/name` via a temporary file and rename, so the
/// file is either absent or complete.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileDigest> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(&target).map_err(|e| Error::io(&target, e.error))?;
    Ok(FileDigest {
        name: name.to_string(),
        sha256: sha256_hex(bytes),
        bytes: bytes.len() as u64,
    })
}

/// Creates `dir` and confirms a file can be placed in it.
pub fn prepare_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir.to_path_buf())
}

/// Writes every data file, then the manifest listing their digests.
pub fn write_artifacts(dir: &Path, files: &[(String, Vec<u8>)], mut manifest: RunManifest) -> Result<RunManifest> {
    prepare_dir(dir)?;
    manifest.files = files
        .iter()
        .map(|(name, bytes)| write_atomic(dir, name, bytes))
        .collect::<Result<_>>()?;
    let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    json.push(b'\n');
    write_atomic(dir, MANIFEST_NAME, &json)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        let values = [
            0.1,
            -1.0 / 3.0,
            f64::MIN_POSITIVE,
            f64::MAX,
            5e-324,
            -0.0,
            1.4250531,
            std::f64::consts::PI * 1e200,
        ];
        let mut table = Table::new(&["x", "y"]);
        for v in values {
            table.push(vec![v.into(), Cell::Missing]);
        }
        let parsed = CsvData::parse(&table.to_csv()).unwrap();
        let back = parsed.f64_column("x").unwrap();
        for (v, b) in values.iter().zip(back) {
            assert_eq!(v.to_bits(), b.unwrap().to_bits());
        }
        assert!(parsed.f64_column("y").unwrap().iter().all(Option::is_none));

        let json: Vec<serde_json::Value> = serde_json::from_str(&table.to_json()).unwrap();
        for (v, row) in values.iter().zip(json) {
            assert_eq!(v.to_bits(), row["x"].as_f64().unwrap().to_bits());
            assert!(row["y"].is_null());
        }
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-4.0), "-4.0000000000000000e0");
    }

    #[test]
    fn fixed_headers() {
        assert_eq!(
            Table::new(&PARITY_HEADER).to_csv(),
            "g,g_over_gc,level,energy,energy_shifted,parity,pair_index,pair_gap_shifted,pair_parity_sum,p_even,p_odd,sentinel\n"
        );
        assert_eq!(Table::new(&WAVEFUNCTION_HEADER).to_csv(), "xi,psi_plus,psi_minus\n");
    }

    #[test]
    fn atomic_write_and_digest() {
        let dir = tempfile::tempdir().unwrap();
        let d = write_atomic(dir.path(), "a.csv", b"x\n1\n").unwrap();
        assert_eq!(fs::read(dir.path().join("a.csv")).unwrap(), b"x\n1\n");
        assert_eq!(d.sha256, sha256_hex(b"x\n1\n"));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
