//! Kerr oscillator with two-photon pumping and single-photon loss.
//!
//! `H = −Δ a†a + (U/2) a†a†aa + (G/4)(a†a† + aa)` in the frame rotating at
//! the pump frequency, with jump operator `a` at rate γ.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{CsrBuilder, ZERO};
use crate::lindblad::{Jump, LindbladModel};
use crate::operators::annihilation;
use crate::symmetry::BasisSymmetry;

/// Extra Fock levels above three times the semiclassical photon number.
pub const N_MAX_MARGIN: usize = 15;
/// Upper bound on the tail population accepted by [`truncation_check`].
pub const TAIL_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KerrParams {
    pub delta: f64,
    pub u: f64,
    pub g: f64,
    pub gamma: f64,
    /// Highest Fock state kept.
    pub n_max: usize,
}

impl KerrParams {
    /// Resonant oscillator with unit loss and the default truncation.
    pub fn new(u: f64, g: f64) -> Self {
        Self {
            delta: 0.0,
            u,
            g,
            gamma: 1.0,
            n_max: default_n_max(u, g, 1.0),
        }
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }

    pub fn with_n_max(&self, n_max: usize) -> Self {
        Self { n_max, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u > 0.0) || !self.u.is_finite() {
            return Err(Error::InvalidArgument(format!("U = {} must be positive", self.u)));
        }
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::InvalidArgument(format!("G = {} must be nonnegative", self.g)));
        }
        if !(self.gamma > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidArgument("gamma must be positive and delta finite".into()));
        }
        if self.n_max < 2 {
            return Err(Error::InvalidArgument(format!("n_max = {} < 2", self.n_max)));
        }
        Ok(())
    }

    /// Semiclassical photon number `√(G² − γ²)/(2U)` above threshold, else 0.
    pub fn semiclassical_photons(&self) -> f64 {
        semiclassical_photons(self.u, self.g, self.gamma)
    }
}

pub fn semiclassical_photons(u: f64, g: f64, gamma: f64) -> f64 {
    (g * g - gamma * gamma).max(0.0).sqrt() / (2.0 * u)
}

/// `ceil(3 n_sc) + 15` with `n_sc` the semiclassical photon number.
pub fn default_n_max(u: f64, g: f64, gamma: f64) -> usize {
    (3.0 * semiclassical_photons(u, g, gamma)).ceil() as usize + N_MAX_MARGIN
}

pub fn build_kerr_model(params: &KerrParams) -> Result<LindbladModel> {
    params.validate()?;
    let dim = params.n_max + 1;
    let pump = c64::new(params.g / 4.0, 0.0);
    let mut builder = CsrBuilder::new(dim, dim);
    let mut row = Vec::with_capacity(3);
    for n in 0..dim {
        row.clear();
        let nf = n as f64;
        row.push((n, c64::new(-params.delta * nf + params.u / 2.0 * nf * (nf - 1.0), 0.0)));
        if n >= 2 {
            // ⟨n|a†a†|n−2⟩
            row.push((n - 2, pump * (nf * (nf - 1.0)).sqrt()));
        }
        if n + 2 < dim {
            row.push((n + 2, pump * ((nf + 1.0) * (nf + 2.0)).sqrt()));
        }
        builder.push_row(&mut row);
    }
    let jump = Jump {
        operator: annihilation(params.n_max),
        rate: params.gamma,
    };
    Ok(LindbladModel::new(builder.finish(), vec![jump])?
        .with_label("U", params.u)
        .with_label("G", params.g)
        .with_label("delta", params.delta)
        .with_label("gamma", params.gamma))
}

/// Photon-number parity as a symmetry for reduced solves.
pub fn kerr_symmetry(params: &KerrParams) -> BasisSymmetry {
    BasisSymmetry {
        generators: Vec::new(),
        parity: Some((0..=params.n_max).map(|n| n % 2 == 1).collect()),
    }
}

/// Total population of the `tail_levels` highest Fock states.
pub fn truncation_check(rho: &DensityMatrix, tail_levels: usize) -> Result<f64> {
    let dim = rho.dim();
    if tail_levels >= dim - 1 {
        return Err(Error::InvalidArgument(format!(
            "tail of {tail_levels} levels with n_max = {}",
            dim - 1
        )));
    }
    Ok(rho.populations()[dim - tail_levels..].iter().map(|p| p.max(0.0)).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalState {
    pub alpha: c64,
    pub time: f64,
}

impl SemiclassicalState {
    pub fn photons(&self) -> f64 {
        self.alpha.norm_sqr()
    }
}

pub const SEMICLASSICAL_DT: f64 = 0.01;
pub const SEMICLASSICAL_T_MAX: f64 = 1e6;
const DIVERGENCE_LIMIT: f64 = 1e6;

pub fn default_seed() -> c64 {
    c64::new(0.1, 0.1)
}

/// `dα/dt = (iΔ − iU|α|² − γ/2) α − i(G/2) α*`
fn field_rhs(p: &KerrParams, a: c64) -> c64 {
    let i = c64::new(0.0, 1.0);
    (i * (p.delta - p.u * a.norm_sqr()) - p.gamma / 2.0) * a - i * (p.g / 2.0) * a.conj()
}

/// Integrates the coherent-field equation with fixed-step RK4 until the
/// amplitude moves less than `conv_tol` over one decay time `1/γ`.
pub fn semiclassical_evolve(params: &KerrParams, alpha0: c64, conv_tol: f64) -> Result<SemiclassicalState> {
    semiclassical_evolve_with(params, alpha0, conv_tol, SEMICLASSICAL_DT, SEMICLASSICAL_T_MAX)
}

pub fn semiclassical_evolve_with(
    params: &KerrParams,
    alpha0: c64,
    conv_tol: f64,
    dt: f64,
    t_max: f64,
) -> Result<SemiclassicalState> {
    params.validate()?;
    if alpha0 == ZERO || !alpha0.re.is_finite() || !alpha0.im.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "seed {alpha0} must be finite and nonzero"
        )));
    }
    if !(dt > 0.0) || !(conv_tol > 0.0) {
        return Err(Error::InvalidArgument("dt and conv_tol must be positive".into()));
    }
    let period = 1.0 / params.gamma;
    let substeps = (period / dt).ceil() as usize;
    let h = period / substeps as f64;
    let mut a = alpha0;
    let mut t = 0.0;
    while t < t_max {
        let start = a;
        for _ in 0..substeps {
            let k1 = field_rhs(params, a);
            let k2 = field_rhs(params, a + k1 * (h / 2.0));
            let k3 = field_rhs(params, a + k2 * (h / 2.0));
            let k4 = field_rhs(params, a + k3 * h);
            a += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        }
        t += period;
        if !(a.norm() <= DIVERGENCE_LIMIT) {
            return Err(Error::Divergence { t });
        }
        if (a - start).norm() < conv_tol {
            return Ok(SemiclassicalState { alpha: a, time: t });
        }
    }
    Err(Error::NotConverged {
        t,
        residual: field_rhs(params, a).norm(),
        last: None,
    })
}
