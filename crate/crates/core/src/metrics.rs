//! Similarity measures between mixed states and their susceptibilities.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::density::{DensityMatrix, CLAMP_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::{self, HermitianEigen};

/// Default absolute cutoff on `λ_m + λ_n` in the fidelity susceptibility.
pub const DEFAULT_EPS_CUT: f64 = 1e-12;

/// Eigen-decomposition of a state: populations `λ_n ≥ 0` summing to one and
/// the orthonormal eigenbasis as columns.
#[derive(Clone, Debug)]
pub struct StateSpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat<c64>,
}

impl StateSpectralDecomposition {
    pub fn of(rho: &DensityMatrix) -> Result<Self> {
        let HermitianEigen { values, vectors } = rho.eigen()?;
        let eigenvalues = clamp_nonnegative(values)?;
        Ok(Self {
            eigenvalues,
            eigenvectors: vectors,
        })
    }

    pub fn reconstruct(&self) -> Mat<c64> {
        HermitianEigen {
            values: self.eigenvalues.clone(),
            vectors: self.eigenvectors.clone(),
        }
        .reconstruct_with(|x| x)
    }
}

/// Eigenvalues of magnitude at most `CLAMP_FLOOR` below zero become zero;
/// anything more negative is an error.
fn clamp_nonnegative(values: Vec<f64>) -> Result<Vec<f64>> {
    values
        .into_iter()
        .map(|l| {
            if l >= 0.0 {
                Ok(l)
            } else if l >= -CLAMP_FLOOR {
                Ok(0.0)
            } else {
                Err(Error::InvalidState(format!("eigenvalue {l:e} below -{CLAMP_FLOOR:e}")))
            }
        })
        .collect()
}

/// One point of a susceptibility curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityPoint {
    pub p: f64,
    pub delta_p: f64,
    pub chi_f: Option<f64>,
    pub chi_t: Option<f64>,
}

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Uhlmann fidelity `Tr √(√ρ_a ρ_b √ρ_a)`, evaluated as the trace norm of
/// `√ρ_a √ρ_b` so rank-deficient states do not pick up `√ε` noise.
pub fn fidelity(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Result<f64> {
    same_dim(rho_a, rho_b)?;
    let sqrt_a = psd_sqrt(rho_a)?;
    let sqrt_b = psd_sqrt(rho_b)?;
    let product = &sqrt_a * &sqrt_b;
    let sv = product
        .singular_values()
        .map_err(|e| Error::Eigensolver(format!("singular values: {e:?}")))?;
    Ok(sv.iter().sum::<f64>().clamp(0.0, 1.0))
}

/// Populations below this are indistinguishable from rounding noise in a
/// unit-trace eigendecomposition and are dropped before square roots.
pub const SQRT_FLOOR: f64 = 1e-14;

fn psd_sqrt(rho: &DensityMatrix) -> Result<Mat<c64>> {
    Ok(rho
        .eigen()?
        .reconstruct_with(|l| if l > SQRT_FLOOR { l.sqrt() } else { 0.0 }))
}

/// `χ_F = −(1/(4δp²)) Σ_{n,m} |⟨m|δρ|n⟩|² / (λ_m + λ_n)` over ordered pairs
/// with `λ_m + λ_n > eps_cut`, where `δρ = ρ(p+δp) − ρ(p)` and `λ`, `|n⟩`
/// diagonalize `ρ(p)`.
pub fn fidelity_susceptibility(
    rho_p: &DensityMatrix,
    rho_pp: &DensityMatrix,
    delta_p: f64,
    eps_cut: f64,
) -> Result<f64> {
    same_dim(rho_p, rho_pp)?;
    check_delta(delta_p)?;
    let dec = StateSpectralDecomposition::of(rho_p)?;
    let delta = rho_pp.as_mat() - rho_p.as_mat();
    let v = dec.eigenvectors.as_ref();
    let rotated = v.adjoint() * &delta * v;
    let lam = &dec.eigenvalues;
    let d = lam.len();
    let mut sum = 0.0;
    let mut kept = 0usize;
    for n in 0..d {
        for m in 0..d {
            let denom = lam[m] + lam[n];
            if denom > eps_cut {
                sum += rotated[(m, n)].norm_sqr() / denom;
                kept += 1;
            }
        }
    }
    if kept == 0 {
        return Err(Error::RankCollapse);
    }
    Ok(-sum / (4.0 * delta_p * delta_p))
}

/// `Σ |μ_k|` over the eigenvalues of the Hermitian part of `m`.
pub fn trace_norm_hermitian(m: MatRef<'_, c64>) -> Result<f64> {
    Ok(linalg::hermitian_eigenvalues(m)?.iter().map(|x| x.abs()).sum())
}

/// `T = ½ ‖ρ_b − ρ_a‖₁`
pub fn trace_distance(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Result<f64> {
    same_dim(rho_a, rho_b)?;
    let diff = rho_b.as_mat() - rho_a.as_mat();
    Ok((trace_norm_hermitian(diff.as_ref())? / 2.0).clamp(0.0, 1.0))
}

/// `χ_T = T(ρ(p), ρ(p+δp)) / δp`
pub fn trace_distance_susceptibility(rho_p: &DensityMatrix, rho_pp: &DensityMatrix, delta_p: f64) -> Result<f64> {
    check_delta(delta_p)?;
    Ok(trace_distance(rho_p, rho_pp)? / delta_p)
}

fn check_delta(delta_p: f64) -> Result<()> {
    if !(delta_p > 0.0) || !delta_p.is_finite() {
        return Err(Error::InvalidArgument(format!("delta_p = {delta_p} must be positive")));
    }
    Ok(())
}
