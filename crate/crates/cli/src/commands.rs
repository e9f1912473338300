//! The subcommands: susceptibility sweeps, mean-field phase curves,
//! stability maps and scaling fits.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use dissipative_core::kerr::{default_seed, semiclassical_evolve_with, SEMICLASSICAL_DT, TAIL_TOLERANCE};
use dissipative_core::metrics::SusceptibilityPoint;
use dissipative_core::sweep::{
    interior_extrema, locate_extremum, sweep, Extremum, KerrFamily, ModelFamily, PointDiagnostics, Solver,
    SolverChoice, SusceptibilityCurve, SweepOptions, XyzCoupling, XyzFamily,
};
use dissipative_core::xyz::{mf_steady_state_with, stability_map, MeanFieldOptions, XYZParams};
use dissipative_core::{fit_linear_extrapolate, fit_power_law, FitKind, ScalingFit};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cache::{CachedSource, CACHE_DIR_ENV};
use crate::config::{LoadedConfig, ModelKind, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{
    read_json, read_xy, write_json, write_xy, CacheReport, CurveRow, CurveWriter, ExtremumReport, PointRecord,
    RunManifest, RunStatus, SweepSummary,
};

/// Grid points solved between two flushes of the result files.
pub const CHUNK: usize = 8;
/// Fraction of failed points above which a sweep exits with status 2.
pub const FAILURE_LIMIT: f64 = 0.1;
/// Order parameter (transverse magnetization or photon number) that counts
/// as the ordered phase in mean-field curves.
pub const ONSET_THRESHOLD: f64 = 1e-3;
/// Fock levels whose population is reported as the truncation tail.
pub const TAIL_LEVELS: usize = 5;

pub const CURVE_CSV: &str = "curve.csv";
pub const FINE_CSV: &str = "curve_fine.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const MANIFEST_JSON: &str = "manifest.json";

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

/// Routes Ctrl-C into a flag checked between chunks, so partial results are
/// flushed before exiting.
pub fn install_interrupt_handler() {
    if let Err(e) = ctrlc::set_handler(|| INTERRUPTED.store(true, Ordering::SeqCst)) {
        log::warn!("cannot install interrupt handler: {e}");
    }
}

fn interrupted() -> bool {
    INTERRUPTED.load(Ordering::SeqCst)
}

/// Flags shared by the config-driven commands.
#[derive(Clone, Debug, Default)]
pub struct RunArgs {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub no_cache: bool,
    pub solver: Option<SolverChoice>,
}

/// Loads the config, applies command-line overrides and creates the output
/// directory.
pub fn prepare(args: &RunArgs, expected: Option<ModelKind>) -> Result<(LoadedConfig, PathBuf)> {
    let mut loaded = LoadedConfig::from_path(&args.config)?;
    let c = &mut loaded.config;
    if let Some(kind) = expected {
        if c.model != kind {
            return Err(CliError::Usage(format!(
                "{} expects model = {:?}, config has {:?}",
                command_name(kind),
                kind,
                c.model
            )));
        }
    }
    if let Some(s) = args.solver {
        c.solver.method = s;
    }
    if args.no_cache {
        c.cache = false;
    }
    let out = args
        .out
        .clone()
        .or_else(|| c.out.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set `out` in the config".into()))?;
    c.out = Some(out.clone());
    fs::create_dir_all(&out).map_err(CliError::io(&out))?;
    Ok((loaded, out))
}

fn command_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Xyz => "xyz-sweep",
        ModelKind::Kerr => "kerr-sweep",
    }
}

/// Hex SHA-256 over the command, toolkit version and the config without
/// the settings that cannot change results (output path, cache toggle).
pub fn provenance(command: &str, config: Option<&RunConfig>, extra: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update([0]);
    if let Some(c) = config {
        let normalized = RunConfig {
            out: None,
            cache: true,
            ..c.clone()
        };
        h.update(normalized.to_toml().as_bytes());
    }
    h.update(extra);
    hex::encode(h.finalize())
}

fn xyz_params(c: &RunConfig) -> XYZParams {
    c.xyz.clone().unwrap_or_default().params()
}

fn coupling(name: &str) -> XyzCoupling {
    match name {
        "Jx" => XyzCoupling::Jx,
        "Jz" => XyzCoupling::Jz,
        _ => XyzCoupling::Jy,
    }
}

fn solver_for(c: &RunConfig, family: &dyn ModelFamily) -> Result<(Solver, String)> {
    let s = &c.solver;
    let mut solver = Solver::for_family(s.method, family)?;
    if !s.symmetry {
        solver = solver.without_symmetry();
    }
    solver.ed.residual_tol = s.residual_tol;
    solver.evolve.dt = s.dt;
    solver.evolve.conv_tol = s.conv_tol;
    solver.evolve.t_max = s.t_max;
    let settings = format!(
        "method={:?};symmetry={};residual_tol={:e};dt={:?};conv_tol={:e};t_max={:e}",
        s.method, s.symmetry, s.residual_tol, s.dt, s.conv_tol, s.t_max
    );
    Ok((solver, settings))
}

fn cache_dir(c: &RunConfig, out: &Path) -> Result<Option<PathBuf>> {
    if !c.cache {
        return Ok(None);
    }
    let dir = std::env::var_os(CACHE_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| out.join("cache"));
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    Ok(Some(dir))
}

struct SweepJob<'a> {
    family: &'a dyn ModelFamily,
    source: &'a CachedSource<'a>,
    delta_p: f64,
    opts: SweepOptions,
    with_gap: bool,
    manifest_path: PathBuf,
}

impl SweepJob<'_> {
    fn sync_manifest(&self, manifest: &mut RunManifest) -> Result<()> {
        manifest.cache = CacheReport {
            dir: self.source.dir().map(Path::to_owned),
            hits: self.source.hits.load(Ordering::Relaxed),
            misses: self.source.misses.load(Ordering::Relaxed),
        };
        write_json(&self.manifest_path, manifest)
    }

    /// Sweeps `grid` chunk by chunk, appending to `csv` and rewriting the
    /// manifest after each chunk. Each chunk also solves the first point of
    /// the next one, so shifted solves line up with the grid exactly as in a
    /// single sweep. Stops early when interrupted.
    fn run(&self, grid: &[f64], csv: &Path, manifest: &mut RunManifest) -> Result<SusceptibilityCurve> {
        let mut writer = CurveWriter::create(csv, self.with_gap)?;
        let mut points: Vec<SusceptibilityPoint> = Vec::with_capacity(grid.len());
        let mut diagnostics: Vec<PointDiagnostics> = Vec::with_capacity(grid.len());
        let mut solver = None;
        for start in (0..grid.len()).step_by(CHUNK) {
            if interrupted() {
                break;
            }
            let end = (start + CHUNK).min(grid.len());
            let window = &grid[start..(end + 1).min(grid.len())];
            let part = sweep(self.family, self.source, window, self.delta_p, &self.opts)?;
            solver.get_or_insert(part.solver);
            let k = end - start;
            let gaps: Vec<Option<std::result::Result<f64, String>>> = if self.with_gap {
                window[..k]
                    .par_iter()
                    .map(|&p| {
                        let gap = self.family.build(p).and_then(|m| self.source.gap(&m));
                        Some(gap.map_err(|e| e.to_string()))
                    })
                    .collect()
            } else {
                vec![None; k]
            };
            let mut rows = Vec::with_capacity(k);
            for ((pt, diag), gap) in part.points[..k].iter().zip(&part.diagnostics[..k]).zip(gaps) {
                let mut record = PointRecord::from_diagnostics(pt.p, diag);
                if self.with_gap {
                    record.truncation_tail = self.source.tail_at(pt.p);
                    if let Some(t) = record.truncation_tail.filter(|&t| t > TAIL_TOLERANCE) {
                        log::warn!(
                            "Fock tail {t:.1e} at {} = {}; raise n_max",
                            self.family.param_name(),
                            pt.p
                        );
                    }
                }
                let gap = match gap {
                    Some(Ok(g)) => Some(g),
                    Some(Err(e)) => {
                        record.gap_error = Some(e);
                        None
                    }
                    None => None,
                };
                if let Some(e) = &diag.error {
                    log::warn!("{} = {}: {e}", self.family.param_name(), pt.p);
                }
                rows.push(CurveRow {
                    p: pt.p,
                    delta_p: pt.delta_p,
                    chi_f: pt.chi_f,
                    chi_t: pt.chi_t,
                    solver_residual: diag.residual,
                    gap,
                });
                manifest.points.push(record);
            }
            writer.push(&rows)?;
            points.extend_from_slice(&part.points[..k]);
            diagnostics.extend_from_slice(&part.diagnostics[..k]);
            manifest.points_done += k;
            self.sync_manifest(manifest)?;
            log::info!("{} / {} points", manifest.points_done, manifest.points_total);
        }
        Ok(SusceptibilityCurve {
            model_id: self.family.model_id(),
            param_name: self.family.param_name().to_owned(),
            grid: points.iter().map(|p| p.p).collect(),
            points,
            diagnostics,
            delta_p: self.delta_p,
            solver: solver.unwrap_or(dissipative_core::SolverKind::Ed),
        })
    }
}

fn report(curve: &SusceptibilityCurve, which: Extremum) -> ExtremumReport {
    ExtremumReport::from_result(locate_extremum(curve, which), interior_extrema(curve, which).len())
}

/// Shared driver of `xyz-sweep` and `kerr-sweep`.
pub fn run_sweep(args: &RunArgs, kind: ModelKind) -> Result<SweepSummary> {
    let command = command_name(kind);
    let (loaded, out) = prepare(args, Some(kind))?;
    let c = &loaded.config;
    let section = c
        .sweep
        .clone()
        .ok_or_else(|| CliError::Usage(format!("{command} needs a [sweep] table")))?;
    let grid = loaded.grid()?;
    let param = loaded.param_name()?;
    let delta_p = section.delta_p();

    let xyz_family;
    let kerr_family;
    let (family, n_sites, u): (&dyn ModelFamily, _, _) = match kind {
        ModelKind::Xyz => {
            let base = xyz_params(c);
            let n = base.n_sites();
            xyz_family = XyzFamily {
                base,
                coupling: coupling(&param),
            };
            (&xyz_family, Some(n), None)
        }
        ModelKind::Kerr => {
            let k = c.kerr.clone().unwrap_or_default();
            let g_max = grid[grid.len() - 1] + delta_p;
            kerr_family = KerrFamily {
                base: k.params(grid[0], g_max),
            };
            log::info!("Fock cutoff n_max = {}", kerr_family.base.n_max);
            (&kerr_family, None, Some(k.u))
        }
    };

    let (solver, settings) = solver_for(c, family)?;
    let mut source = CachedSource::new(&solver, cache_dir(c, &out)?, settings);
    if kind == ModelKind::Kerr {
        source = source.with_tails("G", TAIL_LEVELS);
    }
    let job = SweepJob {
        family,
        source: &source,
        delta_p,
        opts: SweepOptions {
            metrics: section.metric_set(),
            ..SweepOptions::default()
        },
        with_gap: kind == ModelKind::Kerr,
        manifest_path: out.join(MANIFEST_JSON),
    };

    let mut manifest = RunManifest::start(command, Some(c), provenance(command, Some(c), &[]), grid.len());
    manifest.outputs = vec![CURVE_CSV.into(), SUMMARY_JSON.into()];
    job.sync_manifest(&mut manifest)?;

    let coarse = job.run(&grid, &out.join(CURVE_CSV), &mut manifest)?;
    if interrupted() {
        return Err(finish_interrupted(&job, &mut manifest));
    }

    let mut fine = None;
    if let Some(step) = section.refine_step {
        let which = if section.metric_set().chi_f {
            Extremum::MinChiF
        } else {
            Extremum::MaxChiT
        };
        match locate_extremum(&coarse, which) {
            Ok(loc) => {
                let lo = (loc.bracket.0 / step).round() * step;
                let n = ((loc.bracket.1 - loc.bracket.0) / step).round() as usize;
                let fine_grid: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
                manifest.points_total += fine_grid.len();
                manifest.outputs.push(FINE_CSV.into());
                fine = Some(job.run(&fine_grid, &out.join(FINE_CSV), &mut manifest)?);
                if interrupted() {
                    return Err(finish_interrupted(&job, &mut manifest));
                }
            }
            Err(e) => log::warn!("no refinement: {e}"),
        }
    }

    let pick = |which: Extremum| -> ExtremumReport {
        let coarse_report = report(&coarse, which);
        match fine.as_ref().map(|f| report(f, which)) {
            Some(r @ ExtremumReport::Found { .. }) => r,
            _ => coarse_report,
        }
    };
    let metrics = section.metric_set();
    let failures = coarse.failures() + fine.as_ref().map_or(0, |f| f.failures());
    let total = manifest.points_total;
    let summary = SweepSummary {
        model_id: family.model_id(),
        param: param.clone(),
        n_sites,
        u,
        delta_p,
        points: grid.len(),
        failures,
        min_chi_f: metrics.chi_f.then(|| pick(Extremum::MinChiF)),
        max_chi_t: metrics.chi_t.then(|| pick(Extremum::MaxChiT)),
        refined: fine.is_some(),
    };
    write_json(&out.join(SUMMARY_JSON), &summary)?;

    let too_many = failures as f64 > FAILURE_LIMIT * total as f64;
    manifest.finish(if too_many {
        RunStatus::Failed
    } else {
        RunStatus::Complete
    });
    job.sync_manifest(&mut manifest)?;
    if too_many {
        return Err(CliError::TooManyFailures {
            failed: failures,
            total,
        });
    }
    Ok(summary)
}

fn finish_interrupted(job: &SweepJob<'_>, manifest: &mut RunManifest) -> CliError {
    manifest.finish(RunStatus::Interrupted);
    if let Err(e) = job.sync_manifest(manifest) {
        return e;
    }
    CliError::Interrupted {
        done: manifest.points_done,
        total: manifest.points_total,
    }
}

/// Summary of a mean-field or semiclassical phase curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub model: ModelKind,
    pub param: String,
    pub points: usize,
    /// First grid value whose order parameter exceeds `onset_threshold`:
    /// max(|⟨σˣ⟩|, |⟨σʸ⟩|) for spins, |α|² for the oscillator.
    pub onset: Option<f64>,
    pub onset_threshold: f64,
    pub limit_cycles: usize,
    pub failures: usize,
}

/// Mean-field magnetizations (`mf_sx.csv`, `mf_sy.csv`, `mf_sz.csv`) or the
/// semiclassical field modulus (`alpha_abs.csv`) over the sweep grid.
pub fn run_mf_phase(args: &RunArgs) -> Result<PhaseSummary> {
    const COMMAND: &str = "mf-phase";
    let (loaded, out) = prepare(args, None)?;
    let c = &loaded.config;
    let grid = loaded.grid()?;
    let param = loaded.param_name()?;
    let mf = &c.mean_field;
    let mut manifest = RunManifest::start(COMMAND, Some(c), provenance(COMMAND, Some(c), &[]), grid.len());

    // (order parameter, columns, error)
    type Point = (Option<f64>, Vec<Option<f64>>, Option<dissipative_core::Error>);
    let (outputs, points): (Vec<&str>, Vec<Point>) = match c.model {
        ModelKind::Xyz => {
            let family = XyzFamily {
                base: xyz_params(c),
                coupling: coupling(&param),
            };
            let seed = mf.bloch_seed()?;
            let opts = MeanFieldOptions {
                t_max: mf.t_max,
                ..MeanFieldOptions::default()
            };
            let pts = grid
                .par_iter()
                .map(
                    |&p| match mf_steady_state_with(&family.params_at(p), seed, mf.conv_tol, &opts) {
                        Ok(b) => (
                            Some(b.sx.abs().max(b.sy.abs())),
                            vec![Some(b.sx), Some(b.sy), Some(b.sz)],
                            None,
                        ),
                        Err(e) => (None, vec![None; 3], Some(e)),
                    },
                )
                .collect();
            (vec!["mf_sx.csv", "mf_sy.csv", "mf_sz.csv"], pts)
        }
        ModelKind::Kerr => {
            let k = c.kerr.clone().unwrap_or_default();
            let pts = grid
                .par_iter()
                .map(|&g| {
                    match semiclassical_evolve_with(
                        &k.params(g, g),
                        default_seed(),
                        mf.conv_tol,
                        SEMICLASSICAL_DT,
                        mf.t_max,
                    ) {
                        Ok(s) => (Some(s.photons()), vec![Some(s.alpha.norm())], None),
                        Err(e) => (None, vec![None], Some(e)),
                    }
                })
                .collect();
            (vec!["alpha_abs.csv"], pts)
        }
    };

    let headers: &[&str] = match c.model {
        ModelKind::Xyz => &["sx", "sy", "sz"],
        ModelKind::Kerr => &["alpha_abs"],
    };
    for (col, (file, header)) in outputs.iter().zip(headers).enumerate() {
        let rows: Vec<(f64, Option<f64>)> = grid.iter().zip(&points).map(|(&p, pt)| (p, pt.1[col])).collect();
        write_xy(&out.join(file), [param.as_str(), header], &rows)?;
    }

    let mut limit_cycles = 0;
    let mut failures = 0;
    for (&p, (_, _, err)) in grid.iter().zip(&points) {
        let mut record = PointRecord {
            p,
            ..PointRecord::default()
        };
        if let Some(e) = err {
            failures += 1;
            if matches!(e, dissipative_core::Error::LimitCycle { .. }) {
                limit_cycles += 1;
            }
            log::warn!("{param} = {p}: {e}");
            record.error = Some(e.to_string());
        }
        manifest.points.push(record);
    }
    let onset = grid
        .iter()
        .zip(&points)
        .find(|(_, pt)| pt.0.is_some_and(|v| v > ONSET_THRESHOLD))
        .map(|(&p, _)| p);
    let summary = PhaseSummary {
        model: c.model,
        param,
        points: grid.len(),
        onset,
        onset_threshold: ONSET_THRESHOLD,
        limit_cycles,
        failures,
    };
    write_json(&out.join(SUMMARY_JSON), &summary)?;
    manifest.outputs = outputs.iter().map(|s| s.to_string()).collect();
    manifest.outputs.push(SUMMARY_JSON.into());
    manifest.points_done = grid.len();
    manifest.finish(RunStatus::Complete);
    write_json(&out.join(MANIFEST_JSON), &manifest)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub resolution: usize,
    pub argmax: (f64, f64),
    pub max: f64,
}

/// Most unstable growth rate of the all-down state on a `k` grid, written
/// as `stability_map.csv` with columns `kx, ky, max_re`.
pub fn run_stability_map(args: &RunArgs) -> Result<MapSummary> {
    const COMMAND: &str = "stability-map";
    let (loaded, out) = prepare(args, Some(ModelKind::Xyz)).map_err(|e| match e {
        CliError::Usage(_) => CliError::Usage("stability-map expects model = \"xyz\"".into()),
        other => other,
    })?;
    let c = &loaded.config;
    let params = xyz_params(c);
    let resolution = c.map.resolution;
    let mut manifest = RunManifest::start(
        COMMAND,
        Some(c),
        provenance(COMMAND, Some(c), &[]),
        resolution * resolution,
    );
    let map = stability_map(&params, resolution)?;

    let path = out.join("stability_map.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    let fmt_err = |e: csv::Error| CliError::Format {
        path: path.clone(),
        message: e.to_string(),
    };
    w.write_record(["kx", "ky", "max_re"]).map_err(fmt_err)?;
    for (iy, row) in map.values.iter().enumerate() {
        for (ix, v) in row.iter().enumerate() {
            w.serialize((map.k[ix], map.k[iy], v)).map_err(fmt_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Format {
        path: path.clone(),
        message: e.to_string(),
    })?;
    crate::output::write_atomic(&path, &bytes).map_err(CliError::io(&path))?;

    let summary = MapSummary {
        jx: params.jx,
        jy: params.jy,
        jz: params.jz,
        resolution,
        argmax: map.argmax,
        max: map.max,
    };
    write_json(&out.join(SUMMARY_JSON), &summary)?;
    manifest.outputs = vec!["stability_map.csv".into(), SUMMARY_JSON.into()];
    manifest.points_done = manifest.points_total;
    manifest.finish(RunStatus::Complete);
    write_json(&out.join(MANIFEST_JSON), &manifest)?;
    Ok(summary)
}

/// Abscissa of a scaling fit read from sweep summaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FitX {
    /// Number of lattice sites.
    N,
    InverseN,
    /// Kerr nonlinearity.
    U,
}

/// Ordinate of a scaling fit read from sweep summaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FitY {
    /// Location of the extremum.
    PStar,
    /// Value at the extremum.
    ChiStar,
    AbsChiStar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FitExtremum {
    MinChiF,
    MaxChiT,
}

#[derive(Clone, Debug)]
pub struct FitArgs {
    pub summaries: Vec<PathBuf>,
    /// Two-column `x,y` CSV used instead of summaries.
    pub csv: Option<PathBuf>,
    pub kind: FitKind,
    pub x: FitX,
    pub y: FitY,
    pub extremum: FitExtremum,
    /// Extrapolation point of linear fits.
    pub target: f64,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub inputs: Vec<PathBuf>,
    pub x: Option<FitX>,
    pub y: Option<FitY>,
    pub extremum: Option<FitExtremum>,
    pub points: Vec<(f64, f64)>,
    pub fit: ScalingFit,
    /// Linear fits only.
    pub target: Option<f64>,
    pub prediction: Option<f64>,
}

fn fit_points(args: &FitArgs) -> Result<Vec<(f64, f64)>> {
    if let Some(path) = &args.csv {
        return read_xy(path)?
            .into_iter()
            .map(|(x, y)| {
                y.map(|y| (x, y)).ok_or_else(|| CliError::Format {
                    path: path.clone(),
                    message: format!("missing y at x = {x}"),
                })
            })
            .collect();
    }
    let mut pts = Vec::with_capacity(args.summaries.len());
    for path in &args.summaries {
        let s: SweepSummary = read_json(path)?;
        let bad = |message: String| CliError::Format {
            path: path.clone(),
            message,
        };
        let x = match args.x {
            FitX::N | FitX::InverseN => {
                let n = s.n_sites.ok_or_else(|| bad("no n_sites in summary".into()))? as f64;
                if args.x == FitX::N {
                    n
                } else {
                    1.0 / n
                }
            }
            FitX::U => s.u.ok_or_else(|| bad("no u in summary".into()))?,
        };
        let report = match args.extremum {
            FitExtremum::MinChiF => s.min_chi_f,
            FitExtremum::MaxChiT => s.max_chi_t,
        }
        .ok_or_else(|| bad("requested metric was not swept".into()))?;
        let y = match args.y {
            FitY::PStar => report.p_star(),
            FitY::ChiStar => report.chi_star(),
            FitY::AbsChiStar => report.chi_star().map(f64::abs),
        }
        .ok_or_else(|| bad(format!("no interior extremum: {report:?}")))?;
        pts.push((x, y));
    }
    Ok(pts)
}

/// Power-law or linear fit over extrema of several sweeps, written to
/// `fit.json`.
pub fn run_fit(args: &FitArgs) -> Result<FitRecord> {
    const COMMAND: &str = "fit";
    if args.csv.is_some() == !args.summaries.is_empty() {
        return Err(CliError::Usage("give either summary files or --csv".into()));
    }
    fs::create_dir_all(&args.out).map_err(CliError::io(&args.out))?;
    let pts = fit_points(args)?;
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (fit, target, prediction) = match args.kind {
        FitKind::PowerLaw => (fit_power_law(&xs, &ys)?, None, None),
        FitKind::Linear => {
            let (fit, y) = fit_linear_extrapolate(&xs, &ys, args.target)?;
            (fit, Some(args.target), Some(y))
        }
    };
    let from_summaries = args.csv.is_none();
    let record = FitRecord {
        inputs: args.csv.iter().chain(&args.summaries).cloned().collect(),
        x: from_summaries.then_some(args.x),
        y: from_summaries.then_some(args.y),
        extremum: from_summaries.then_some(args.extremum),
        points: pts,
        fit,
        target,
        prediction,
    };
    write_json(&args.out.join("fit.json"), &record)?;
    let inputs = serde_json::to_vec(&record.points).expect("points serialize");
    let mut manifest = RunManifest::start(COMMAND, None, provenance(COMMAND, None, &inputs), record.points.len());
    manifest.outputs = vec!["fit.json".into()];
    manifest.points_done = manifest.points_total;
    manifest.finish(RunStatus::Complete);
    write_json(&args.out.join(MANIFEST_JSON), &manifest)?;
    Ok(record)
}
