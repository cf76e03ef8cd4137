//! Output files: fixed CSV schemas, JSON documents and their checksums.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::Format;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// A row of one of the fixed CSV schemas.
pub trait CsvRow: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

/// `orbit`: one row per collision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRow {
    pub step: u64,
    pub component: usize,
    pub r: f64,
    pub phi: f64,
    pub tau: f64,
    pub singularity_distance: f64,
}

impl CsvRow for OrbitRow {
    const HEADER: &'static [&'static str] = &["step", "component", "r", "phi", "tau", "singularity_distance"];
    fn record(&self) -> Vec<String> {
        vec![
            self.step.to_string(),
            self.component.to_string(),
            fmt_f64(self.r),
            fmt_f64(self.phi),
            fmt_f64(self.tau),
            fmt_f64(self.singularity_distance),
        ]
    }
}

/// `cells`: one row per itinerary class. The diameters are the principal
/// extents of the image cloud `TD_m`, empty when too few points were kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub m: u64,
    pub n: u64,
    pub j: u64,
    pub count: u64,
    pub measure: f64,
    pub stderr: f64,
    pub u_diam: Option<f64>,
    pub s_diam: Option<f64>,
}

impl CsvRow for CellRow {
    const HEADER: &'static [&'static str] = &["m", "n", "j", "count", "measure", "stderr", "u_diam", "s_diam"];
    fn record(&self) -> Vec<String> {
        vec![
            self.m.to_string(),
            self.n.to_string(),
            self.j.to_string(),
            self.count.to_string(),
            fmt_f64(self.measure),
            fmt_f64(self.stderr),
            fmt_opt(self.u_diam),
            fmt_opt(self.s_diam),
        ]
    }
}

/// `cells`: `μ(R = n)` and `μ(R ≥ n)` per return time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub n: u64,
    pub level_count: u64,
    pub level: f64,
    pub level_stderr: f64,
    pub tail_count: u64,
    pub tail: f64,
    pub tail_stderr: f64,
}

impl CsvRow for LevelRow {
    const HEADER: &'static [&'static str] =
        &["n", "level_count", "level", "level_stderr", "tail_count", "tail", "tail_stderr"];
    fn record(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.level_count.to_string(),
            fmt_f64(self.level),
            fmt_f64(self.level_stderr),
            self.tail_count.to_string(),
            fmt_f64(self.tail),
            fmt_f64(self.tail_stderr),
        ]
    }
}

/// `corr`: one row per lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagRow {
    pub lag: usize,
    pub cov: f64,
    pub stderr: f64,
    pub eff_k: u64,
    pub max_term: f64,
}

impl CsvRow for LagRow {
    const HEADER: &'static [&'static str] = &["lag", "cov", "stderr", "eff_k", "max_term"];
    fn record(&self) -> Vec<String> {
        vec![
            self.lag.to_string(),
            fmt_f64(self.cov),
            fmt_f64(self.stderr),
            self.eff_k.to_string(),
            fmt_f64(self.max_term),
        ]
    }
}

/// `diag`: one row per grown curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub delta: f64,
    pub curve: usize,
    pub sum: f64,
    pub length: f64,
    pub pieces: usize,
    pub center_length: f64,
}

impl CsvRow for CurveRow {
    const HEADER: &'static [&'static str] = &["delta", "curve", "sum", "length", "pieces", "center_length"];
    fn record(&self) -> Vec<String> {
        vec![
            fmt_f64(self.delta),
            self.curve.to_string(),
            fmt_f64(self.sum),
            fmt_f64(self.length),
            self.pieces.to_string(),
            fmt_f64(self.center_length),
        ]
    }
}

/// `diag`: one row per sampled point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub index: usize,
    pub component: usize,
    pub r: f64,
    pub phi: f64,
    pub expansion: Option<f64>,
    pub radius: Option<f64>,
}

impl CsvRow for PointRow {
    const HEADER: &'static [&'static str] = &["index", "component", "r", "phi", "expansion", "radius"];
    fn record(&self) -> Vec<String> {
        vec![
            self.index.to_string(),
            self.component.to_string(),
            fmt_f64(self.r),
            fmt_f64(self.phi),
            fmt_opt(self.expansion),
            fmt_opt(self.radius),
        ]
    }
}

pub fn csv_bytes<R: CsvRow>(rows: &[R]) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(R::HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

pub fn read_csv<R: CsvRow>(bytes: &[u8]) -> Result<Vec<R>, csv::Error> {
    csv::Reader::from_reader(bytes).deserialize().collect()
}

pub fn read_csv_file<R: CsvRow>(path: &Path) -> Result<Vec<R>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files into one directory and remembers their checksums.
pub struct Outputs {
    pub dir: PathBuf,
    pub format: Format,
    pub files: Vec<OutputFile>,
}

impl Outputs {
    pub fn new(dir: &Path, format: Format) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(OutputFile {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Data rows as `<stem>.csv`, or `<stem>.json` in JSON mode.
    pub fn rows<R: CsvRow>(&mut self, stem: &str, rows: &[R]) -> io::Result<()> {
        match self.format {
            Format::Csv => self.write(&format!("{stem}.csv"), &csv_bytes(rows)?),
            Format::Json => self.json(stem, &rows),
        }
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, stem: &str, value: &T) -> io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
        bytes.push(b'\n');
        self.write(&format!("{stem}.json"), &bytes)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -1e3f64..1e3]
    }

    proptest! {
        #[test]
        fn lag_rows_round_trip(rows in prop::collection::vec((0usize..100, finite(), finite(), any::<u64>(), finite()), 0..20)) {
            let rows: Vec<LagRow> = rows.into_iter().map(|(lag, cov, stderr, eff_k, max_term)| LagRow { lag, cov, stderr, eff_k, max_term }).collect();
            let back: Vec<LagRow> = read_csv(&csv_bytes(&rows).unwrap()).unwrap();
            prop_assert_eq!(back, rows);
        }

        #[test]
        fn cell_rows_round_trip(rows in prop::collection::vec((any::<u64>(), 1u64..1000, finite(), proptest::option::of(finite()), proptest::option::of(finite())), 0..20)) {
            let rows: Vec<CellRow> = rows.into_iter().map(|(m, n, x, u, s)| CellRow { m, n, j: m % 7, count: m / 3, measure: x, stderr: x.abs(), u_diam: u, s_diam: s }).collect();
            let back: Vec<CellRow> = read_csv(&csv_bytes(&rows).unwrap()).unwrap();
            prop_assert_eq!(back, rows);
        }

        #[test]
        fn orbit_level_curve_point_rows_round_trip(a in finite(), b in finite(), c in finite(), k in any::<u32>()) {
            let o = vec![OrbitRow { step: k as u64, component: 3, r: a, phi: b, tau: c, singularity_distance: a.abs() }];
            prop_assert_eq!(read_csv::<OrbitRow>(&csv_bytes(&o).unwrap()).unwrap(), o);
            let l = vec![LevelRow { n: k as u64, level_count: 4, level: a, level_stderr: b, tail_count: 9, tail: c, tail_stderr: 0.0 }];
            prop_assert_eq!(read_csv::<LevelRow>(&csv_bytes(&l).unwrap()).unwrap(), l);
            let cr = vec![CurveRow { delta: a, curve: k as usize, sum: b, length: c, pieces: 2, center_length: a }];
            prop_assert_eq!(read_csv::<CurveRow>(&csv_bytes(&cr).unwrap()).unwrap(), cr);
            let p = vec![PointRow { index: 1, component: 0, r: a, phi: b, expansion: Some(c), radius: None }];
            prop_assert_eq!(read_csv::<PointRow>(&csv_bytes(&p).unwrap()).unwrap(), p);
        }
    }

    #[test]
    fn floats_use_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
    }
}
