//! Parameter sweeps of steady-state susceptibilities and extremum location.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::kerr::{build_kerr_model, kerr_symmetry, KerrParams};
use crate::lindblad::{build_liouvillian, LindbladModel};
use crate::metrics::{self, SusceptibilityPoint, DEFAULT_EPS_CUT};
use crate::steady::{self, EdOptions, EvolveOptions, SolverKind, SteadyState};
use crate::symmetry::{steady_state_symmetric, BasisSymmetry, PairOrbits};
use crate::xyz::{build_xyz_model, lattice_symmetry, XYZParams};

/// Default perturbation for fidelity susceptibilities.
pub const DELTA_CHI_F: f64 = 1e-3;
/// Default perturbation for trace-distance susceptibilities.
pub const DELTA_CHI_T: f64 = 1e-4;
/// Auto solver switches from direct solves to RK4 above this many unknowns.
pub const AUTO_ED_LIMIT: usize = 300_000;

/// A one-parameter family of Lindblad models.
pub trait ModelFamily: Sync {
    fn model_id(&self) -> String;
    fn param_name(&self) -> &str;
    fn build(&self, p: f64) -> Result<LindbladModel>;
    /// Symmetries shared by every member of the family.
    fn symmetry(&self) -> Option<BasisSymmetry> {
        None
    }
    fn hilbert_dim(&self) -> usize;
    /// RK4 seed when no warm start is available.
    fn initial_state(&self) -> DensityMatrix {
        DensityMatrix::maximally_mixed(self.hilbert_dim())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XyzCoupling {
    Jx,
    #[default]
    Jy,
    Jz,
}

#[derive(Clone, Debug)]
pub struct XyzFamily {
    pub base: XYZParams,
    pub coupling: XyzCoupling,
}

impl XyzFamily {
    pub fn jy(base: XYZParams) -> Self {
        Self {
            base,
            coupling: XyzCoupling::Jy,
        }
    }

    pub fn params_at(&self, p: f64) -> XYZParams {
        let mut out = self.base.clone();
        match self.coupling {
            XyzCoupling::Jx => out.jx = p,
            XyzCoupling::Jy => out.jy = p,
            XyzCoupling::Jz => out.jz = p,
        }
        out
    }
}

impl ModelFamily for XyzFamily {
    fn model_id(&self) -> String {
        format!("xyz-{}x{}", self.base.lx, self.base.ly)
    }

    fn param_name(&self) -> &str {
        match self.coupling {
            XyzCoupling::Jx => "Jx",
            XyzCoupling::Jy => "Jy",
            XyzCoupling::Jz => "Jz",
        }
    }

    fn build(&self, p: f64) -> Result<LindbladModel> {
        build_xyz_model(&self.params_at(p))
    }

    fn symmetry(&self) -> Option<BasisSymmetry> {
        Some(lattice_symmetry(&self.base))
    }

    fn hilbert_dim(&self) -> usize {
        1 << self.base.n_sites()
    }

    /// All spins down, the state the dissipation pumps towards.
    fn initial_state(&self) -> DensityMatrix {
        let d = self.hilbert_dim();
        let mut pops = vec![0.0; d];
        pops[d - 1] = 1.0;
        DensityMatrix::diagonal(&pops).expect("valid populations")
    }
}

/// Kerr oscillator swept in the drive `G` at fixed truncation.
#[derive(Clone, Debug)]
pub struct KerrFamily {
    pub base: KerrParams,
}

impl ModelFamily for KerrFamily {
    fn model_id(&self) -> String {
        format!("kerr-u{}-nmax{}", self.base.u, self.base.n_max)
    }

    fn param_name(&self) -> &str {
        "G"
    }

    fn build(&self, p: f64) -> Result<LindbladModel> {
        build_kerr_model(&self.base.with_g(p))
    }

    fn symmetry(&self) -> Option<BasisSymmetry> {
        Some(kerr_symmetry(&self.base))
    }

    fn hilbert_dim(&self) -> usize {
        self.base.n_max + 1
    }

    /// Vacuum.
    fn initial_state(&self) -> DensityMatrix {
        let mut pops = vec![0.0; self.hilbert_dim()];
        pops[0] = 1.0;
        DensityMatrix::diagonal(&pops).expect("valid populations")
    }
}

/// Anything that turns a model into its steady state.
pub trait SteadyStateSource: Sync {
    fn steady_state(&self, model: &LindbladModel, warm: Option<&DensityMatrix>) -> Result<SteadyState>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Ed,
    Rk4,
    #[default]
    Auto,
}

/// Direct or time-evolution steady-state solver, optionally restricted to a
/// symmetry sector.
#[derive(Clone, Debug)]
pub struct Solver {
    pub choice: SolverChoice,
    pub ed: EdOptions,
    pub evolve: EvolveOptions,
    orbits: Option<PairOrbits>,
    seed: Option<DensityMatrix>,
}

impl Solver {
    pub fn new(choice: SolverChoice) -> Self {
        Self {
            choice,
            ed: EdOptions::default(),
            evolve: EvolveOptions::default(),
            orbits: None,
            seed: None,
        }
    }

    /// Picks up the family's symmetry and RK4 seed.
    pub fn for_family(choice: SolverChoice, family: &dyn ModelFamily) -> Result<Self> {
        let mut s = Self::new(choice);
        if let Some(sym) = family.symmetry() {
            s.orbits = Some(PairOrbits::new(family.hilbert_dim(), &sym)?);
        }
        s.seed = Some(family.initial_state());
        Ok(s)
    }

    pub fn without_symmetry(mut self) -> Self {
        self.orbits = None;
        self
    }

    pub fn with_evolve(mut self, evolve: EvolveOptions) -> Self {
        self.evolve = evolve;
        self
    }

    /// Which method a model of Hilbert dimension `dim` would get.
    pub fn method_for(&self, dim: usize) -> SolverKind {
        match self.choice {
            SolverChoice::Ed => SolverKind::Ed,
            SolverChoice::Rk4 => SolverKind::Rk4,
            SolverChoice::Auto => {
                let unknowns = match &self.orbits {
                    Some(o) if o.dim() == dim => o.len(),
                    _ => dim * dim,
                };
                if unknowns <= AUTO_ED_LIMIT {
                    SolverKind::Ed
                } else {
                    SolverKind::Rk4
                }
            }
        }
    }
}

impl SteadyStateSource for Solver {
    fn steady_state(&self, model: &LindbladModel, warm: Option<&DensityMatrix>) -> Result<SteadyState> {
        let d = model.dim();
        match self.method_for(d) {
            SolverKind::Ed => match &self.orbits {
                Some(o) if o.dim() == d => steady_state_symmetric(model, o, &self.ed),
                _ => steady::steady_state_ed_with(&build_liouvillian(model), &self.ed),
            },
            SolverKind::Rk4 => {
                let seed = match (warm, &self.seed) {
                    (Some(w), _) => w.clone(),
                    (None, Some(s)) if s.dim() == d => s.clone(),
                    _ => DensityMatrix::maximally_mixed(d),
                };
                steady::steady_state_evolve_with(&build_liouvillian(model), &seed, &self.evolve)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSet {
    pub chi_f: bool,
    pub chi_t: bool,
}

impl MetricSet {
    pub const BOTH: Self = Self {
        chi_f: true,
        chi_t: true,
    };
    pub const CHI_F: Self = Self {
        chi_f: true,
        chi_t: false,
    };
    pub const CHI_T: Self = Self {
        chi_f: false,
        chi_t: true,
    };
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub metrics: MetricSet,
    pub eps_cut: f64,
    /// Solve points concurrently. Sequential sweeps may warm-start RK4.
    pub parallel: bool,
    pub warm_start: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            metrics: MetricSet::BOTH,
            eps_cut: DEFAULT_EPS_CUT,
            parallel: true,
            warm_start: false,
        }
    }
}

/// Per-point solver record.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    /// Worse of the two solver residuals.
    pub residual: Option<f64>,
    pub method: Option<SolverKind>,
    pub rk4_steps: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityCurve {
    pub model_id: String,
    pub param_name: String,
    pub grid: Vec<f64>,
    pub points: Vec<SusceptibilityPoint>,
    pub diagnostics: Vec<PointDiagnostics>,
    pub delta_p: f64,
    pub solver: SolverKind,
}

impl SusceptibilityCurve {
    pub fn failures(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.error.is_some()).count()
    }

    fn series(&self, which: Extremum) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|pt| {
                let v = match which {
                    Extremum::MinChiF => pt.chi_f,
                    Extremum::MaxChiT => pt.chi_t,
                };
                v.map(|v| (pt.p, v))
            })
            .collect()
    }
}

/// Evenly spaced grid `lo, lo + step, …` up to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("grid [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

fn same_key(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

pub fn validate_grid(grid: &[f64], delta_p: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if !(delta_p > 0.0) || !delta_p.is_finite() {
        return Err(Error::InvalidArgument(format!("delta_p = {delta_p} must be positive")));
    }
    for w in grid.windows(2) {
        let gap = w[1] - w[0];
        if !(gap > 0.0) {
            return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
        }
        if delta_p > gap * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "delta_p = {delta_p} exceeds grid spacing {gap}"
            )));
        }
    }
    Ok(())
}

/// Solves the steady states at every `p` and `p + δp` and evaluates the
/// requested susceptibilities. A shifted point that coincides with the next
/// grid value reuses that solve. Failures are recorded per point.
pub fn sweep(
    family: &dyn ModelFamily,
    source: &dyn SteadyStateSource,
    grid: &[f64],
    delta_p: f64,
    opts: &SweepOptions,
) -> Result<SusceptibilityCurve> {
    validate_grid(grid, delta_p)?;

    let mut keys: Vec<f64> = Vec::with_capacity(2 * grid.len());
    let mut base_idx = Vec::with_capacity(grid.len());
    let mut shift_idx = Vec::with_capacity(grid.len());
    for (i, &p) in grid.iter().enumerate() {
        if keys.last().is_some_and(|&k| same_key(k, p)) {
            base_idx.push(keys.len() - 1);
        } else {
            base_idx.push(keys.len());
            keys.push(p);
        }
        let shifted = p + delta_p;
        if grid.get(i + 1).is_some_and(|&next| same_key(next, shifted)) {
            shift_idx.push(keys.len());
            keys.push(grid[i + 1]);
        } else {
            shift_idx.push(keys.len());
            keys.push(shifted);
        }
    }

    let solve = |p: f64, warm: Option<&DensityMatrix>| -> Result<SteadyState> {
        let model = family.build(p)?;
        source.steady_state(&model, warm)
    };
    let states: Vec<Result<SteadyState>> = if opts.parallel {
        keys.par_iter().map(|&p| solve(p, None)).collect()
    } else {
        let mut out: Vec<Result<SteadyState>> = Vec::with_capacity(keys.len());
        for &p in &keys {
            let warm = if opts.warm_start {
                out.iter().rev().find_map(|r| r.as_ref().ok()).map(|s| s.state.clone())
            } else {
                None
            };
            out.push(solve(p, warm.as_ref()));
        }
        out
    };

    let mut solver = None;
    let mut points = Vec::with_capacity(grid.len());
    let mut diagnostics = Vec::with_capacity(grid.len());
    for (i, &p) in grid.iter().enumerate() {
        let mut point = SusceptibilityPoint {
            p,
            delta_p,
            chi_f: None,
            chi_t: None,
        };
        let mut diag = PointDiagnostics::default();
        match (&states[base_idx[i]], &states[shift_idx[i]]) {
            (Ok(a), Ok(b)) => {
                solver.get_or_insert(a.method);
                diag.residual = Some(a.residual.max(b.residual));
                diag.method = Some(a.method);
                diag.rk4_steps = a.steps + b.steps;
                let dp = keys[shift_idx[i]] - keys[base_idx[i]];
                let evaluated = (|| -> Result<()> {
                    if opts.metrics.chi_f {
                        point.chi_f = Some(metrics::fidelity_susceptibility(&a.state, &b.state, dp, opts.eps_cut)?);
                    }
                    if opts.metrics.chi_t {
                        point.chi_t = Some(metrics::trace_distance_susceptibility(&a.state, &b.state, dp)?);
                    }
                    Ok(())
                })();
                if let Err(e) = evaluated {
                    diag.error = Some(e.to_string());
                }
            }
            (Err(e), _) | (_, Err(e)) => diag.error = Some(e.to_string()),
        }
        points.push(point);
        diagnostics.push(diag);
    }

    Ok(SusceptibilityCurve {
        model_id: family.model_id(),
        param_name: family.param_name().to_string(),
        grid: grid.to_vec(),
        points,
        diagnostics,
        delta_p,
        solver: solver.unwrap_or(SolverKind::Ed),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    MinChiF,
    MaxChiT,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremumLocation {
    pub p_star: f64,
    pub chi_star: f64,
    /// Bracketing grid values.
    pub bracket: (f64, f64),
}

/// Grid extremum refined by the parabola through it and its neighbours.
pub fn locate_extremum(curve: &SusceptibilityCurve, which: Extremum) -> Result<ExtremumLocation> {
    let series = curve.series(which);
    locate_in_series(&series, which == Extremum::MinChiF)
}

/// Same as [`locate_extremum`] on bare `(p, value)` samples.
pub fn locate_in_series(series: &[(f64, f64)], minimum: bool) -> Result<ExtremumLocation> {
    if series.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            have: series.len(),
        });
    }
    let sign = if minimum { 1.0 } else { -1.0 };
    let mut best = 0;
    for (i, &(_, v)) in series.iter().enumerate() {
        if sign * v < sign * series[best].1 {
            best = i;
        }
    }
    if best == 0 || best == series.len() - 1 {
        return Err(Error::BoundaryExtremum { p: series[best].0 });
    }
    let (x0, y0) = series[best - 1];
    let (x1, y1) = series[best];
    let (x2, y2) = series[best + 1];
    // Newton divided differences
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    let (p_star, chi_star) = if sign * curv > 0.0 {
        let slope = d01 - curv * (x0 + x1);
        let v = (-slope / (2.0 * curv)).clamp(x0, x2);
        let val = y0 + d01 * (v - x0) + curv * (v - x0) * (v - x1);
        (v, val)
    } else {
        (x1, y1)
    };
    Ok(ExtremumLocation {
        p_star,
        chi_star,
        bracket: (x0, x2),
    })
}

/// Strict interior local extrema of the requested kind, as `(p, value)`.
/// A well-formed valley or peak yields exactly one.
pub fn interior_extrema(curve: &SusceptibilityCurve, which: Extremum) -> Vec<(f64, f64)> {
    let series = curve.series(which);
    let sign = if which == Extremum::MinChiF { 1.0 } else { -1.0 };
    series
        .windows(3)
        .filter(|w| sign * w[1].1 < sign * w[0].1 && sign * w[1].1 < sign * w[2].1)
        .map(|w| w[1])
        .collect()
}

/// Result of a coarse sweep followed by a fine sweep around its extremum.
#[derive(Clone, Debug)]
pub struct RefinedSweep {
    pub coarse: SusceptibilityCurve,
    pub fine: SusceptibilityCurve,
    pub extremum: ExtremumLocation,
}

/// Coarse pass over `[lo, hi]`, then a fine pass covering one coarse step on
/// either side of the coarse extremum.
#[allow(clippy::too_many_arguments)]
pub fn two_pass_sweep(
    family: &dyn ModelFamily,
    source: &dyn SteadyStateSource,
    (lo, hi): (f64, f64),
    coarse_step: f64,
    fine_step: f64,
    delta_p: f64,
    which: Extremum,
    opts: &SweepOptions,
) -> Result<RefinedSweep> {
    let coarse = sweep(family, source, &grid(lo, hi, coarse_step)?, delta_p, opts)?;
    let first = locate_extremum(&coarse, which)?;
    let start = (first.bracket.0 / fine_step).round() * fine_step;
    let span = first.bracket.1 - first.bracket.0;
    let n = (span / fine_step).round() as usize;
    let fine_grid: Vec<f64> = (0..=n).map(|i| start + i as f64 * fine_step).collect();
    let fine = sweep(family, source, &fine_grid, delta_p, opts)?;
    let extremum = locate_extremum(&fine, which)?;
    Ok(RefinedSweep { coarse, fine, extremum })
}
