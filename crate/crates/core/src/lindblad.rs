//! Lindblad models and their Liouvillian superoperators.
//!
//! Under column stacking the generator reads
//!
//! ```text
//! 𝓛 = −i(I⊗H − Hᵀ⊗I) + Σ_j (γ_j/2)[2 L_j*⊗L_j − I⊗(L_j†L_j) − (L_j†L_j)ᵀ⊗I]
//! ```
//!
//! Rows are generated directly from the operators instead of forming the
//! Kronecker products: with `K = Σ_j γ_j L_j†L_j` and `H_eff = H − (i/2)K`,
//! `𝓛ρ = −i H_eff ρ + i ρ H_eff† + Σ_j γ_j L_j ρ L_j†`.

use std::collections::BTreeMap;

use faer::{c64, Mat, MatRef, Scale};

use crate::density::{self, DensityMatrix, Vectorization};
use crate::error::{Error, Result};
use crate::linalg::{self, CsrBuilder, CsrMatrix, I, ZERO};

/// Hermiticity tolerance for model Hamiltonians.
pub const HAMILTONIAN_TOL: f64 = 1e-12;

/// A jump operator with its rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub operator: CsrMatrix,
    pub rate: f64,
}

/// Hamiltonian plus dissipative channels.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel {
    dim: usize,
    hamiltonian: CsrMatrix,
    jumps: Vec<Jump>,
    labels: BTreeMap<String, f64>,
}

impl LindbladModel {
    pub fn new(hamiltonian: CsrMatrix, jumps: Vec<Jump>) -> Result<Self> {
        let dim = hamiltonian.nrows();
        if hamiltonian.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: hamiltonian.ncols(),
            });
        }
        let defect = hamiltonian.hermiticity_defect();
        if defect > HAMILTONIAN_TOL {
            return Err(Error::InvalidModel(format!(
                "Hamiltonian not Hermitian (defect {defect:e})"
            )));
        }
        for (k, jump) in jumps.iter().enumerate() {
            if jump.operator.nrows() != dim || jump.operator.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: jump.operator.nrows(),
                });
            }
            if !(jump.rate >= 0.0) || !jump.rate.is_finite() {
                return Err(Error::InvalidModel(format!("jump {k} has rate {}", jump.rate)));
            }
        }
        Ok(Self {
            dim,
            hamiltonian,
            jumps,
            labels: BTreeMap::new(),
        })
    }

    pub fn from_dense(hamiltonian: MatRef<'_, c64>, jumps: &[(MatRef<'_, c64>, f64)]) -> Result<Self> {
        let jumps = jumps
            .iter()
            .map(|(op, rate)| Jump {
                operator: CsrMatrix::from_dense(*op),
                rate: *rate,
            })
            .collect();
        Self::new(CsrMatrix::from_dense(hamiltonian), jumps)
    }

    pub fn with_label(mut self, name: &str, value: f64) -> Self {
        self.labels.insert(name.to_owned(), value);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &CsrMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn labels(&self) -> &BTreeMap<String, f64> {
        &self.labels
    }

    /// `−i[H, ρ] + Σ_j γ_j (L ρ L† − ½{L†L, ρ})` evaluated with dense products.
    pub fn rhs_dense(&self, rho: MatRef<'_, c64>) -> Mat<c64> {
        let h = self.hamiltonian.to_dense();
        let comm = &h * rho - rho * &h;
        let mut out = Mat::from_fn(self.dim, self.dim, |i, j| -I * comm[(i, j)]);
        for jump in &self.jumps {
            let l = jump.operator.to_dense();
            let ld = l.adjoint();
            let ldl = ld * &l;
            let term =
                &l * rho * ld - (&ldl * rho) * Scale(c64::new(0.5, 0.0)) - (rho * &ldl) * Scale(c64::new(0.5, 0.0));
            out += term * Scale(c64::new(jump.rate, 0.0));
        }
        out
    }
}

/// Row generator for the Liouvillian of a model, in the column-stacking
/// basis. Row `a + b·D` gives the coefficients of `(𝓛ρ)[a, b]`.
#[derive(Clone, Debug)]
pub struct LiouvillianRows {
    dim: usize,
    h_eff: CsrMatrix,
    jumps: Vec<(CsrMatrix, f64)>,
}

impl LiouvillianRows {
    pub fn new(model: &LindbladModel) -> Self {
        let dim = model.dim;
        let mut decay = CsrMatrix::zeros(dim, dim);
        for jump in &model.jumps {
            if jump.rate == 0.0 {
                continue;
            }
            let ldl = jump.operator.adjoint().matmul(&jump.operator);
            decay = decay.add(&ldl.scale(c64::new(jump.rate, 0.0)));
        }
        let h_eff = model.hamiltonian.add(&decay.scale(c64::new(0.0, -0.5)));
        let jumps = model
            .jumps
            .iter()
            .filter(|j| j.rate != 0.0)
            .map(|j| (j.operator.clone(), j.rate))
            .collect();
        Self { dim, h_eff, jumps }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.dim
    }

    /// Writes the unsorted (possibly repeated) entries of row `a + b·D` into
    /// `out`, after clearing it.
    pub fn row_entries(&self, a: usize, b: usize, out: &mut Vec<(usize, c64)>) {
        let d = self.dim;
        out.clear();
        // −i H_eff ρ : coefficient −i H_eff[a, c] on ρ[c, b]
        for (c, h) in self.h_eff.row(a) {
            out.push((c + b * d, -I * h));
        }
        // +i ρ H_eff† : coefficient i conj(H_eff[b, e]) on ρ[a, e]
        for (e, h) in self.h_eff.row(b) {
            out.push((a + e * d, I * h.conj()));
        }
        // γ L ρ L† : coefficient γ L[a, c] conj(L[b, e]) on ρ[c, e]
        for (l, rate) in &self.jumps {
            for (c, lac) in l.row(a) {
                for (e, lbe) in l.row(b) {
                    out.push((c + e * d, lac * lbe.conj() * *rate));
                }
            }
        }
    }

    pub fn build(&self) -> CsrMatrix {
        let d = self.dim;
        let n = d * d;
        let mut builder = CsrBuilder::new(n, n);
        let mut row = Vec::new();
        for r in 0..n {
            self.row_entries(r % d, r / d, &mut row);
            builder.push_row(&mut row);
        }
        builder.finish()
    }

    /// `max_r |(𝓛 v)_r|` without materializing `𝓛`.
    pub fn residual_max(&self, v: &[c64]) -> f64 {
        let d = self.dim;
        let mut row = Vec::new();
        let mut worst = 0.0f64;
        for r in 0..d * d {
            self.row_entries(r % d, r / d, &mut row);
            let acc: c64 = row.iter().map(|&(c, x)| x * v[c]).sum();
            worst = worst.max(acc.norm());
        }
        worst
    }
}

/// Storage for a superoperator matrix.
#[derive(Clone, Debug)]
pub enum SuperMatrix {
    Dense(Mat<c64>),
    Sparse(CsrMatrix),
}

/// A `D² × D²` linear map on column-stacked density matrices.
#[derive(Clone, Debug)]
pub struct Superoperator {
    hilbert_dim: usize,
    matrix: SuperMatrix,
}

impl Superoperator {
    pub const CONVENTION: Vectorization = Vectorization::ColumnStacking;

    pub fn from_sparse(hilbert_dim: usize, m: CsrMatrix) -> Result<Self> {
        Self::check(hilbert_dim, m.nrows(), m.ncols())?;
        Ok(Self {
            hilbert_dim,
            matrix: SuperMatrix::Sparse(m),
        })
    }

    pub fn from_dense(hilbert_dim: usize, m: Mat<c64>) -> Result<Self> {
        Self::check(hilbert_dim, m.nrows(), m.ncols())?;
        Ok(Self {
            hilbert_dim,
            matrix: SuperMatrix::Dense(m),
        })
    }

    fn check(d: usize, r: usize, c: usize) -> Result<()> {
        if r != d * d || c != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: r.max(c),
            });
        }
        Ok(())
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    /// Liouville dimension `D²`.
    pub fn dim(&self) -> usize {
        self.hilbert_dim * self.hilbert_dim
    }

    pub fn matrix(&self) -> &SuperMatrix {
        &self.matrix
    }

    pub fn to_dense(&self) -> Mat<c64> {
        match &self.matrix {
            SuperMatrix::Dense(m) => m.clone(),
            SuperMatrix::Sparse(s) => s.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> CsrMatrix {
        match &self.matrix {
            SuperMatrix::Dense(m) => CsrMatrix::from_dense(m.as_ref()),
            SuperMatrix::Sparse(s) => s.clone(),
        }
    }

    pub fn densified(&self) -> Self {
        Self {
            hilbert_dim: self.hilbert_dim,
            matrix: SuperMatrix::Dense(self.to_dense()),
        }
    }

    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        let mut out = vec![ZERO; v.len()];
        self.apply_into(v, &mut out);
        out
    }

    pub fn apply_into(&self, v: &[c64], out: &mut [c64]) {
        match &self.matrix {
            SuperMatrix::Sparse(s) => s.mul_vec_into(v, out),
            SuperMatrix::Dense(m) => {
                assert_eq!(v.len(), m.ncols());
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for (j, x) in v.iter().enumerate() {
                        acc += m[(i, j)] * x;
                    }
                    *o = acc;
                }
            }
        }
    }

    /// `𝓛ρ` as a matrix.
    pub fn apply_to(&self, rho: &DensityMatrix) -> Result<Mat<c64>> {
        if rho.dim() != self.hilbert_dim {
            return Err(Error::DimensionMismatch {
                expected: self.hilbert_dim,
                got: rho.dim(),
            });
        }
        density::devectorize_mat(&self.apply(&density::vectorize(rho)), self.hilbert_dim)
    }

    /// `‖𝓛 vec(ρ)‖∞`
    pub fn residual(&self, rho: &DensityMatrix) -> f64 {
        linalg::vec_max_abs(&self.apply(&density::vectorize(rho)))
    }

    /// Induced ∞-norm (maximum absolute row sum).
    pub fn row_sum_norm(&self) -> f64 {
        match &self.matrix {
            SuperMatrix::Sparse(s) => s.row_sum_norm(),
            SuperMatrix::Dense(m) => (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    /// `max_c |Σ_a 𝓛[(a,a), c]|`, which vanishes for trace-preserving maps.
    pub fn trace_defect(&self) -> f64 {
        let d = self.hilbert_dim;
        let mut acc = vec![ZERO; d * d];
        match &self.matrix {
            SuperMatrix::Sparse(s) => {
                for a in 0..d {
                    for (c, v) in s.row(a + a * d) {
                        acc[c] += v;
                    }
                }
            }
            SuperMatrix::Dense(m) => {
                for a in 0..d {
                    for (c, slot) in acc.iter_mut().enumerate() {
                        *slot += m[(a + a * d, c)];
                    }
                }
            }
        }
        linalg::vec_max_abs(&acc)
    }
}

/// Assembles the Liouvillian of `model` in sparse form.
pub fn build_liouvillian(model: &LindbladModel) -> Superoperator {
    let rows = LiouvillianRows::new(model);
    Superoperator {
        hilbert_dim: model.dim,
        matrix: SuperMatrix::Sparse(rows.build()),
    }
}
