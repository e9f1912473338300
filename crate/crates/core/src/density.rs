//! Density matrices and the column-stacking vectorization.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{self, CsrMatrix, HermitianEigen, ZERO};

/// Tolerance for the Hermiticity, trace and positivity invariants.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues below `-CLAMP_FLOOR` are clamped to zero by the fixup.
pub const CLAMP_FLOOR: f64 = 1e-12;
/// The fixup refuses to clamp more than this much negative weight.
pub const MAX_CLAMPED_MASS: f64 = 1e-8;

/// Vectorization convention used everywhere: `vec(X)[i + j·D] = X[i, j]`,
/// so that `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vectorization {
    ColumnStacking,
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: Mat<c64>,
}

impl DensityMatrix {
    /// Validates `m` against the state invariants and stores its Hermitian
    /// part.
    pub fn new(m: Mat<c64>) -> Result<Self> {
        check_square(m.as_ref())?;
        let defect = hermiticity_defect(m.as_ref());
        if defect > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let entries = linalg::hermitize(m.as_ref());
        let tr = linalg::trace(entries.as_ref()).re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = linalg::hermitian_eigenvalues(entries.as_ref())?
            .first()
            .copied()
            .unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { entries })
    }

    /// Turns a numerically obtained steady-state candidate into a valid
    /// state: trace-normalize, hermitize, clamp eigenvalues below
    /// `-CLAMP_FLOOR` to zero and renormalize.
    pub fn from_unnormalized(m: MatRef<'_, c64>) -> Result<Self> {
        check_square(m)?;
        let tr = linalg::trace(m);
        if !(tr.norm() > 0.0) || !tr.re.is_finite() {
            return Err(Error::InvalidState(format!("cannot normalize trace {tr}")));
        }
        let scaled = Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / tr);
        let herm = linalg::hermitize(scaled.as_ref());
        let eig = linalg::hermitian_eigen(herm.as_ref())?;
        let clamped: f64 = eig.values.iter().filter(|&&l| l < -CLAMP_FLOOR).map(|l| -l).sum();
        if clamped > MAX_CLAMPED_MASS {
            return Err(Error::NegativeMass(clamped));
        }
        let entries = if clamped > 0.0 {
            eig.reconstruct_with(|l| if l < -CLAMP_FLOOR { 0.0 } else { l })
        } else {
            herm
        };
        let tr = linalg::trace(entries.as_ref()).re;
        let entries = Mat::from_fn(entries.nrows(), entries.ncols(), |i, j| entries[(i, j)] / tr);
        Ok(Self {
            entries: linalg::hermitize(entries.as_ref()),
        })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &[c64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let n = psi.len();
        Ok(Self {
            entries: Mat::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / norm2),
        })
    }

    /// Diagonal state from populations; they must be nonnegative and sum to 1.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let n = populations.len();
        let m = Mat::from_fn(n, n, |i, j| if i == j { c64::new(populations[i], 0.0) } else { ZERO });
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            entries: Mat::from_fn(
                dim,
                dim,
                |i, j| {
                    if i == j {
                        c64::new(1.0 / dim as f64, 0.0)
                    } else {
                        ZERO
                    }
                },
            ),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_mat(&self) -> MatRef<'_, c64> {
        self.entries.as_ref()
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.entries
    }

    pub fn eigen(&self) -> Result<HermitianEigen> {
        linalg::hermitian_eigen(self.entries.as_ref())
    }

    /// Populations in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    /// `U ρ U†`
    pub fn conjugate_by(&self, u: MatRef<'_, c64>) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.nrows(),
            });
        }
        let m = u * self.entries.as_ref() * u.adjoint();
        Ok(Self {
            entries: linalg::hermitize(m.as_ref()),
        })
    }
}

fn check_square(m: MatRef<'_, c64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidState("empty matrix".into()));
    }
    Ok(())
}

fn hermiticity_defect(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Column-stacks a state.
pub fn vectorize(rho: &DensityMatrix) -> Vec<c64> {
    vectorize_mat(rho.as_mat())
}

pub fn vectorize_mat(m: MatRef<'_, c64>) -> Vec<c64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Inverse of [`vectorize_mat`] for a `dim × dim` matrix.
pub fn devectorize_mat(v: &[c64], dim: usize) -> Result<Mat<c64>> {
    if v.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            got: v.len(),
        });
    }
    Ok(Mat::from_fn(dim, dim, |i, j| v[i + j * dim]))
}

/// Inverse of [`vectorize`]; the result must satisfy the state invariants.
pub fn devectorize(v: &[c64], dim: usize) -> Result<DensityMatrix> {
    DensityMatrix::new(devectorize_mat(v, dim)?)
}

/// `Tr(ρ O)`
pub fn expectation(rho: &DensityMatrix, observable: MatRef<'_, c64>) -> Result<c64> {
    let d = rho.dim();
    if observable.nrows() != d || observable.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: observable.nrows(),
        });
    }
    let r = rho.as_mat();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += r[(i, j)] * observable[(j, i)];
        }
    }
    Ok(acc)
}

/// `Tr(ρ O)` for a sparse observable.
pub fn expectation_sparse(rho: &DensityMatrix, observable: &CsrMatrix) -> Result<c64> {
    let d = rho.dim();
    if observable.nrows() != d || observable.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: observable.nrows(),
        });
    }
    let r = rho.as_mat();
    Ok(observable.triplets().map(|(j, i, o)| r[(i, j)] * o).sum())
}
