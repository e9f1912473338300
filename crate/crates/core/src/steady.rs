//! Steady states by direct null-space solve and by RK4 time evolution.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::density::{self, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};
use crate::lindblad::{SuperMatrix, Superoperator};
use crate::metrics;
use crate::spectrum::{self, HowMany};

/// Residual tolerance `‖𝓛 vec(ρ)‖∞` for direct solves.
pub const ED_RESIDUAL_TOL: f64 = 1e-10;
pub const DEFAULT_CONV_TOL: f64 = 1e-10;
pub const DEFAULT_T_MAX: f64 = 1e4;
pub const MAX_DT: f64 = 0.05;
/// Mid-run trace drift that aborts an integration.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Ed,
    Rk4,
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Ed => "ed",
            SolverKind::Rk4 => "rk4",
        })
    }
}

/// A solved steady state with its diagnostics.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub state: DensityMatrix,
    /// `‖𝓛 vec(ρ)‖∞` of the returned state.
    pub residual: f64,
    pub method: SolverKind,
    /// Integration time for RK4; zero for direct solves.
    pub time: f64,
    /// RK4 steps taken; zero for direct solves.
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct EdOptions {
    pub residual_tol: f64,
}

impl Default for EdOptions {
    fn default() -> Self {
        Self {
            residual_tol: ED_RESIDUAL_TOL,
        }
    }
}

/// Steady state as the null vector of `𝓛`: the `ρ₀₀` row of `𝓛` (which is
/// linearly dependent on the other diagonal rows because `𝓛` preserves
/// trace) is replaced by the trace functional and the system solved with a
/// sparse LU.
pub fn steady_state_ed(l: &Superoperator) -> Result<DensityMatrix> {
    steady_state_ed_with(l, &EdOptions::default()).map(|s| s.state)
}

pub fn steady_state_ed_with(l: &Superoperator, opts: &EdOptions) -> Result<SteadyState> {
    let d = l.hilbert_dim();
    let n = l.dim();
    let mut trip: Vec<Triplet<usize, usize, c64>> = Vec::new();
    match l.matrix() {
        SuperMatrix::Sparse(s) => {
            trip.reserve(s.nnz() + d);
            trip.extend(
                s.triplets()
                    .filter(|&(r, _, _)| r != 0)
                    .map(|(r, c, v)| Triplet::new(r, c, v)),
            );
        }
        SuperMatrix::Dense(m) => {
            for c in 0..n {
                for r in 1..n {
                    if m[(r, c)] != ZERO {
                        trip.push(Triplet::new(r, c, m[(r, c)]));
                    }
                }
            }
        }
    }
    trip.extend((0..d).map(|a| Triplet::new(0, a + a * d, ONE)));
    let mut rhs = vec![ZERO; n];
    rhs[0] = ONE;
    let x = match solve_sparse(n, &trip, &rhs) {
        Ok(x) => x,
        Err(e) => return Err(diagnose_failure(l, e)),
    };
    let rho_raw = density::devectorize_mat(&x, d)?;
    let state = DensityMatrix::from_unnormalized(rho_raw.as_ref()).map_err(|e| diagnose_failure(l, e))?;
    let residual = l.residual(&state);
    if !(residual <= opts.residual_tol) {
        return Err(diagnose_failure(
            l,
            Error::Residual {
                residual,
                tolerance: opts.residual_tol,
            },
        ));
    }
    Ok(SteadyState {
        state,
        residual,
        method: SolverKind::Ed,
        time: 0.0,
        steps: 0,
    })
}

/// Sparse LU solve with one step of iterative refinement. Fails on a
/// singular or non-finite result.
pub(crate) fn solve_sparse(n: usize, trip: &[Triplet<usize, usize, c64>], rhs: &[c64]) -> Result<Vec<c64>> {
    let a = SparseColMat::<usize, c64>::try_new_from_triplets(n, n, trip)
        .map_err(|e| Error::LinearSolve(format!("assembly: {e:?}")))?;
    let lu = a.sp_lu().map_err(|e| Error::LinearSolve(format!("LU: {e:?}")))?;
    let mut x = Mat::from_fn(n, 1, |i, _| rhs[i]);
    lu.solve_in_place(x.as_mut());
    let mut r = Mat::from_fn(n, 1, |i, _| rhs[i]);
    for t in trip {
        r[(t.row, 0)] -= t.val * x[(t.col, 0)];
    }
    lu.solve_in_place(r.as_mut());
    let out: Vec<c64> = (0..n).map(|i| x[(i, 0)] + r[(i, 0)]).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::LinearSolve("singular system (non-finite solution)".into()));
    }
    Ok(out)
}

/// A failed direct solve usually means a degenerate zero eigenspace; check
/// the spectrum when it is affordable so the caller gets the eigenvectors.
fn diagnose_failure(l: &Superoperator, original: Error) -> Error {
    if l.dim() <= spectrum::DENSE_LIMIT {
        if let Err(e @ Error::DegenerateSteadyState { .. }) = spectrum::liouvillian_spectrum(l, HowMany::All) {
            return e;
        }
    }
    original
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    /// Step size; `None` selects [`default_dt`].
    pub dt: Option<f64>,
    /// Trace distance between states one time unit apart that counts as
    /// converged.
    pub conv_tol: f64,
    pub t_max: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            dt: None,
            conv_tol: DEFAULT_CONV_TOL,
            t_max: DEFAULT_T_MAX,
        }
    }
}

/// `min(0.5 / ‖𝓛‖∞, 0.05)`
pub fn default_dt(l: &Superoperator) -> f64 {
    let norm = l.row_sum_norm();
    if norm > 0.0 {
        (0.5 / norm).min(MAX_DT)
    } else {
        MAX_DT
    }
}

/// Integrates `d vec(ρ)/dt = 𝓛 vec(ρ)` with classical fixed-step RK4 until
/// states one time unit apart are within `conv_tol` in trace distance.
pub fn steady_state_evolve(
    l: &Superoperator,
    rho0: &DensityMatrix,
    dt: f64,
    conv_tol: f64,
    t_max: f64,
) -> Result<DensityMatrix> {
    let opts = EvolveOptions {
        dt: Some(dt),
        conv_tol,
        t_max,
    };
    steady_state_evolve_with(l, rho0, &opts).map(|s| s.state)
}

pub fn steady_state_evolve_with(l: &Superoperator, rho0: &DensityMatrix, opts: &EvolveOptions) -> Result<SteadyState> {
    let d = l.hilbert_dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho0.dim(),
        });
    }
    let dt_req = opts.dt.unwrap_or_else(|| default_dt(l));
    if !(dt_req > 0.0) || !(opts.conv_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt_req} and conv_tol = {} must be positive",
            opts.conv_tol
        )));
    }
    // whole number of steps per time unit so checkpoints are exactly 1/γ apart
    let substeps = (1.0 / dt_req).ceil().max(1.0) as usize;
    let dt = 1.0 / substeps as f64;

    let n = l.dim();
    let mut v = density::vectorize(rho0);
    let mut prev = rho0.as_mat().to_owned();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![ZERO; n],
        vec![ZERO; n],
        vec![ZERO; n],
        vec![ZERO; n],
        vec![ZERO; n],
    );
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut last_distance = f64::INFINITY;
    let half = dt / 2.0;
    while t < opts.t_max {
        for _ in 0..substeps {
            l.apply_into(&v, &mut k1);
            axpy_into(&v, half, &k1, &mut tmp);
            l.apply_into(&tmp, &mut k2);
            axpy_into(&v, half, &k2, &mut tmp);
            l.apply_into(&tmp, &mut k3);
            axpy_into(&v, dt, &k3, &mut tmp);
            l.apply_into(&tmp, &mut k4);
            for i in 0..n {
                v[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
            }
        }
        steps += substeps;
        t += 1.0;

        let tr: c64 = (0..d).map(|a| v[a + a * d]).sum();
        let drift = (tr - ONE).norm();
        if !(drift <= TRACE_DRIFT_LIMIT) {
            return Err(Error::StepInstability {
                t,
                deviation: drift,
                suggested_dt: dt / 2.0,
            });
        }
        let current = density::devectorize_mat(&v, d)?;
        let diff = &current - &prev;
        last_distance = metrics::trace_norm_hermitian(diff.as_ref())? / 2.0;
        if last_distance < opts.conv_tol {
            let state = DensityMatrix::from_unnormalized(current.as_ref())?;
            let residual = l.residual(&state);
            if residual <= 10.0 * opts.conv_tol {
                return Ok(SteadyState {
                    state,
                    residual,
                    method: SolverKind::Rk4,
                    time: t,
                    steps,
                });
            }
        }
        prev = current;
    }
    let last = density::devectorize_mat(&v, d)
        .ok()
        .and_then(|m| DensityMatrix::from_unnormalized(m.as_ref()).ok())
        .map(Box::new);
    Err(Error::NotConverged {
        t,
        residual: last_distance,
        last,
    })
}

fn axpy_into(x: &[c64], a: f64, y: &[c64], out: &mut [c64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + yi * a;
    }
}

/// `‖𝓛 vec(ρ)‖∞`; re-exported for callers holding only a state.
pub fn residual(l: &Superoperator, rho: &DensityMatrix) -> f64 {
    linalg::vec_max_abs(&l.apply(&density::vectorize(rho)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::lindblad::{build_liouvillian, LindbladModel};
    use crate::operators::{sigma_minus, sigma_x, sigma_z};

    fn qubit(drive: f64) -> Superoperator {
        let h = sigma_x() * faer::Scale(c64::new(drive, 0.0));
        build_liouvillian(&LindbladModel::from_dense(h.as_ref(), &[(sigma_minus().as_ref(), 1.0)]).unwrap())
    }

    #[test]
    fn decaying_qubit_relaxes_to_ground() {
        let l = qubit(0.0);
        let rho = steady_state_ed(&l).unwrap();
        let down = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        assert!(max_abs_diff(rho.as_mat(), down.as_mat()) < 1e-14);
    }

    #[test]
    fn excited_population_decays_exponentially() {
        let l = qubit(0.0);
        let up = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        // one time unit with dt = 1e-3
        let opts = EvolveOptions {
            dt: Some(1e-3),
            conv_tol: 1.0,
            t_max: 1.0,
        };
        let out = steady_state_evolve_with(&l, &up, &opts);
        // conv_tol = 1 accepts the first checkpoint at t = 1 unless the residual check rejects it
        let rho = match out {
            Ok(s) => s.state,
            Err(Error::NotConverged { last: Some(last), .. }) => *last,
            Err(e) => panic!("{e}"),
        };
        assert!((rho.populations()[0] - (-1.0f64).exp()).abs() < 1e-6);
        let full = steady_state_evolve(&l, &up, 1e-3, 1e-10, 1e4).unwrap();
        assert!(max_abs_diff(full.as_mat(), DensityMatrix::diagonal(&[0.0, 1.0]).unwrap().as_mat()) < 1e-9);
    }

    #[test]
    fn driven_qubit_solvers_agree() {
        let l = qubit(0.8);
        let ed = steady_state_ed_with(&l, &EdOptions::default()).unwrap();
        assert!(ed.residual <= 1e-12);
        let rk = steady_state_evolve_with(&l, &DensityMatrix::maximally_mixed(2), &EvolveOptions::default()).unwrap();
        assert!(rk.residual <= 1e-9);
        let t = metrics::trace_distance(&ed.state, &rk.state).unwrap();
        assert!(t <= 1e-8, "T = {t}");
        // a steady state is a fixed point of the integrator
        let again = steady_state_evolve(&l, &ed.state, 0.01, 1e-10, 10.0).unwrap();
        assert!(metrics::trace_distance(&again, &ed.state).unwrap() <= 1e-10);
    }

    #[test]
    fn degenerate_zero_space_is_reported() {
        let h = sigma_z();
        let model = LindbladModel::from_dense(h.as_ref(), &[(sigma_z().as_ref(), 0.5)]).unwrap();
        let err = steady_state_ed(&build_liouvillian(&model)).unwrap_err();
        assert!(matches!(err, Error::DegenerateSteadyState { .. }), "{err}");
    }

    #[test]
    fn not_converged_carries_last_state() {
        let l = qubit(0.3);
        let err =
            steady_state_evolve(&l, &DensityMatrix::diagonal(&[1.0, 0.0]).unwrap(), 0.01, 1e-12, 3.0).unwrap_err();
        assert!(matches!(err, Error::NotConverged { last: Some(_), .. }));
    }

    #[test]
    fn oversized_step_is_flagged() {
        let l = qubit(40.0);
        let err =
            steady_state_evolve(&l, &DensityMatrix::diagonal(&[1.0, 0.0]).unwrap(), 1.0, 1e-10, 50.0).unwrap_err();
        assert!(matches!(err, Error::StepInstability { .. }), "{err}");
    }
}
