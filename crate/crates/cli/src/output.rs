//! Result files: curve CSVs, run manifests and summaries.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use dissipative_core::sweep::{ExtremumLocation, PointDiagnostics};
use dissipative_core::SolverKind;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const CURVE_HEADER: [&str; 5] = ["p", "delta_p", "chi_f", "chi_t", "solver_residual"];

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(
        ".{name}.{}.{}.tmp",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("records serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(CliError::io(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// One row of a susceptibility curve; `gap` only exists for Kerr sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub p: f64,
    pub delta_p: f64,
    pub chi_f: Option<f64>,
    pub chi_t: Option<f64>,
    pub solver_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
}

/// Incremental CSV writer; every call to [`CurveWriter::push`] is flushed.
pub struct CurveWriter {
    path: PathBuf,
    inner: csv::Writer<fs::File>,
    with_gap: bool,
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Format {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

impl CurveWriter {
    pub fn create(path: &Path, with_gap: bool) -> Result<Self> {
        let file = fs::File::create(path).map_err(CliError::io(path))?;
        let mut inner = csv::Writer::from_writer(file);
        let mut header = CURVE_HEADER.to_vec();
        if with_gap {
            header.push("gap");
        }
        inner.write_record(&header).map_err(csv_err(path))?;
        Ok(Self {
            path: path.to_owned(),
            inner,
            with_gap,
        })
    }

    pub fn push(&mut self, rows: &[CurveRow]) -> Result<()> {
        for r in rows {
            let res = if self.with_gap {
                self.inner
                    .serialize((r.p, r.delta_p, r.chi_f, r.chi_t, r.solver_residual, r.gap))
            } else {
                self.inner
                    .serialize((r.p, r.delta_p, r.chi_f, r.chi_t, r.solver_residual))
            };
            res.map_err(csv_err(&self.path))?;
        }
        self.inner.flush().map_err(CliError::io(&self.path))
    }
}

pub fn read_curve(path: &Path) -> Result<Vec<CurveRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    if headers.iter().take(5).ne(CURVE_HEADER) {
        return Err(CliError::Format {
            path: path.to_owned(),
            message: format!("unexpected header {headers:?}"),
        });
    }
    rdr.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err(path))
}

/// Writes `(x, y)` columns with the given header.
pub fn write_xy(path: &Path, header: [&str; 2], rows: &[(f64, Option<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Format {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    write_atomic(path, &bytes).map_err(CliError::io(path))
}

pub fn read_xy(path: &Path) -> Result<Vec<(f64, Option<f64>)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    rdr.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err(path))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    /// More than the allowed fraction of points failed.
    Failed,
    Interrupted,
}

/// Per-point solver record in the manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub p: f64,
    pub residual: Option<f64>,
    pub method: Option<SolverKind>,
    pub rk4_steps: usize,
    /// Population of the top Fock levels (Kerr sweeps).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_tail: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_error: Option<String>,
}

impl PointRecord {
    pub fn from_diagnostics(p: f64, d: &PointDiagnostics) -> Self {
        Self {
            p,
            residual: d.residual,
            method: d.method,
            rk4_steps: d.rk4_steps,
            truncation_tail: None,
            error: d.error.clone(),
            gap_error: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CacheReport {
    pub dir: Option<PathBuf>,
    pub hits: usize,
    pub misses: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub command: String,
    pub status: RunStatus,
    /// True until every grid point has been written.
    pub truncated: bool,
    pub started: String,
    pub finished: Option<String>,
    /// SHA-256 over command, toolkit version and the normalized config.
    pub provenance: String,
    pub config: Option<RunConfig>,
    pub threads: usize,
    pub cache: CacheReport,
    pub points_total: usize,
    pub points_done: usize,
    pub points: Vec<PointRecord>,
    pub outputs: Vec<String>,
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start(command: &str, config: Option<&RunConfig>, provenance: String, total: usize) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            toolkit_version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            status: RunStatus::Running,
            truncated: true,
            started: timestamp(),
            finished: None,
            provenance,
            config: config.cloned(),
            threads: rayon::current_num_threads(),
            cache: CacheReport::default(),
            points_total: total,
            points_done: 0,
            points: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn finish(&mut self, status: RunStatus) {
        self.status = status;
        self.truncated = self.points_done < self.points_total;
        self.finished = Some(timestamp());
    }
}

/// Extremum of one metric as reported in a summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExtremumReport {
    Found {
        p_star: f64,
        chi_star: f64,
        bracket: (f64, f64),
        /// Strict interior local extrema on the grid; 1 for a clean valley
        /// or peak.
        local_extrema: usize,
    },
    /// The extreme grid value sits on the grid boundary.
    BoundaryExtremum {
        p: f64,
    },
    Unavailable {
        reason: String,
    },
}

impl ExtremumReport {
    pub fn from_result(r: dissipative_core::Result<ExtremumLocation>, local_extrema: usize) -> Self {
        match r {
            Ok(l) => ExtremumReport::Found {
                p_star: l.p_star,
                chi_star: l.chi_star,
                bracket: l.bracket,
                local_extrema,
            },
            Err(dissipative_core::Error::BoundaryExtremum { p }) => ExtremumReport::BoundaryExtremum { p },
            Err(e) => ExtremumReport::Unavailable { reason: e.to_string() },
        }
    }

    pub fn p_star(&self) -> Option<f64> {
        match self {
            ExtremumReport::Found { p_star, .. } => Some(*p_star),
            _ => None,
        }
    }

    pub fn chi_star(&self) -> Option<f64> {
        match self {
            ExtremumReport::Found { chi_star, .. } => Some(*chi_star),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub model_id: String,
    pub param: String,
    /// Lattice sites for spin models.
    pub n_sites: Option<usize>,
    /// Kerr nonlinearity for oscillator models.
    pub u: Option<f64>,
    pub delta_p: f64,
    pub points: usize,
    pub failures: usize,
    pub min_chi_f: Option<ExtremumReport>,
    pub max_chi_t: Option<ExtremumReport>,
    /// Set when a refinement pass ran; extrema then come from `curve_fine.csv`.
    pub refined: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("curve-rt-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let rows = vec![
            CurveRow {
                p: 0.1 + 0.2,
                delta_p: 1e-3,
                chi_f: Some(-4.253_187_000_000_001),
                chi_t: None,
                solver_residual: Some(3.2e-300),
                gap: Some(-1.0 / 3.0),
            },
            CurveRow {
                p: 1.0,
                delta_p: 1e-3,
                chi_f: None,
                chi_t: Some(f64::MIN_POSITIVE),
                solver_residual: None,
                gap: None,
            },
        ];
        for with_gap in [true, false] {
            let path = dir.join(format!("c{with_gap}.csv"));
            let mut w = CurveWriter::create(&path, with_gap).unwrap();
            w.push(&rows).unwrap();
            drop(w);
            let back = read_curve(&path).unwrap();
            for (a, b) in rows.iter().zip(&back) {
                assert_eq!(a.p.to_bits(), b.p.to_bits());
                assert_eq!(a.chi_f.map(f64::to_bits), b.chi_f.map(f64::to_bits));
                assert_eq!(a.chi_t, b.chi_t);
                assert_eq!(a.solver_residual, b.solver_residual);
                assert_eq!(b.gap, if with_gap { a.gap } else { None });
            }
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn extremum_reports_serialize_with_status() {
        let r = ExtremumReport::BoundaryExtremum { p: 0.5 };
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(text, r#"{"status":"boundary_extremum","p":0.5}"#);
        assert_eq!(serde_json::from_str::<ExtremumReport>(&text).unwrap(), r);
    }
}
