//! Dense helpers on top of `faer` plus a small compressed-row sparse matrix
//! used for operators and Liouvillians.

use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, MatRef, Side};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Rows above this count are processed in parallel by `mul_vec_into`.
const PAR_ROWS: usize = 1 << 14;

pub fn adjoint(m: MatRef<'_, c64>) -> Mat<c64> {
    m.adjoint().to_owned()
}

/// `(M + M†) / 2`
pub fn hermitize(m: MatRef<'_, c64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

pub fn trace(m: MatRef<'_, c64>) -> c64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            best = best.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    best
}

pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn identity(n: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn vec_max_abs(v: &[c64]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<c64>,
}

impl HermitianEigen {
    /// `V diag(f(λ)) V†`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Mat<c64> {
        let n = self.values.len();
        let v = self.vectors.as_ref();
        let scaled = Mat::from_fn(n, n, |i, k| v[(i, k)] * f(self.values[k]));
        &scaled * v.adjoint()
    }
}

/// Diagonalizes the Hermitian part of `m`.
pub fn hermitian_eigen(m: MatRef<'_, c64>) -> Result<HermitianEigen> {
    let h = hermitize(m);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values = (0..h.nrows()).map(|i| evd.S()[i].re).collect();
    Ok(HermitianEigen {
        values,
        vectors: evd.U().to_owned(),
    })
}

pub fn hermitian_eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let h = hermitize(m);
    let vals = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    Ok(vals)
}

/// Compressed sparse row matrix with complex entries. Column indices within
/// each row are sorted and unique.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<c64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![ONE; n],
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: impl IntoIterator<Item = (usize, usize, c64)>) -> Self {
        let mut rows: Vec<Vec<(usize, c64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            rows[r].push((c, v));
        }
        let mut builder = CsrBuilder::new(nrows, ncols);
        for mut row in rows {
            builder.push_row(&mut row);
        }
        builder.finish()
    }

    pub fn from_dense(m: MatRef<'_, c64>) -> Self {
        let mut builder = CsrBuilder::new(m.nrows(), m.ncols());
        let mut row = Vec::new();
        for i in 0..m.nrows() {
            row.clear();
            row.extend((0..m.ncols()).map(|j| (j, m[(i, j)])));
            builder.push_row(&mut row);
        }
        builder.finish()
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, c64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, c64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn values(&self) -> &[c64] {
        &self.values
    }

    pub fn mul_vec(&self, x: &[c64]) -> Vec<c64> {
        let mut y = vec![ZERO; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = A x`. Each row is reduced in a fixed order, so the result does
    /// not depend on the thread count.
    pub fn mul_vec_into(&self, x: &[c64], y: &mut [c64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        let row_dot = |i: usize| {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            acc
        };
        if self.nrows >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row_dot(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row_dot(i);
            }
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v.conj())),
        )
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn scale(&self, s: c64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.prune();
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Self::from_triplets(self.nrows, self.ncols, self.triplets().chain(other.triplets()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut builder = CsrBuilder::new(self.nrows, other.ncols);
        let mut row = Vec::new();
        for i in 0..self.nrows {
            row.clear();
            for (k, a) in self.row(i) {
                row.extend(other.row(k).map(|(j, b)| (j, a * b)));
            }
            builder.push_row(&mut row);
        }
        builder.finish()
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (br, bc) = (other.nrows, other.ncols);
        let mut builder = CsrBuilder::new(self.nrows * br, self.ncols * bc);
        let mut row = Vec::new();
        for i in 0..self.nrows {
            for bi in 0..br {
                row.clear();
                for (j, a) in self.row(i) {
                    row.extend(other.row(bi).map(|(bj, b)| (j * bc + bj, a * b)));
                }
                builder.push_row(&mut row);
            }
        }
        builder.finish()
    }

    /// `max |A - A†|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute row sum, the induced ∞-norm.
    pub fn row_sum_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, c64>> {
        let trip: Vec<_> = self.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .map_err(|e| Error::LinearSolve(format!("sparse assembly: {e:?}")))
    }

    fn prune(&mut self) {
        let rows: Vec<Vec<(usize, c64)>> = (0..self.nrows).map(|i| self.row(i).collect()).collect();
        let mut builder = CsrBuilder::new(self.nrows, self.ncols);
        for mut row in rows {
            builder.push_row(&mut row);
        }
        *self = builder.finish();
    }
}

/// Row-at-a-time CSR assembly.
#[derive(Debug)]
pub struct CsrBuilder {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<c64>,
}

impl CsrBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn reserve(&mut self, nnz: usize) {
        self.col_idx.reserve(nnz);
        self.values.reserve(nnz);
    }

    /// Appends the next row. Entries may be unsorted and repeated; the
    /// slice is sorted in place.
    pub fn push_row(&mut self, entries: &mut [(usize, c64)]) {
        assert!(self.row_ptr.len() <= self.nrows, "too many rows");
        entries.sort_unstable_by_key(|e| e.0);
        let mut k = 0;
        while k < entries.len() {
            let col = entries[k].0;
            assert!(col < self.ncols, "column {col} out of bounds");
            let mut acc = ZERO;
            while k < entries.len() && entries[k].0 == col {
                acc += entries[k].1;
                k += 1;
            }
            if acc != ZERO {
                self.col_idx.push(col);
                self.values.push(acc);
            }
        }
        self.row_ptr.push(self.col_idx.len());
    }

    pub fn finish(self) -> CsrMatrix {
        assert_eq!(self.row_ptr.len(), self.nrows + 1, "missing rows");
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            values: self.values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Mat<c64> {
        Mat::from_fn(3, 3, |i, j| {
            if (i + j) % 2 == 0 {
                c64::new(i as f64 + 1.0, j as f64 - 1.0)
            } else {
                ZERO
            }
        })
    }

    #[test]
    fn dense_sparse_round_trip() {
        let m = sample();
        let s = CsrMatrix::from_dense(m.as_ref());
        assert_eq!(s.nnz(), 5);
        assert_eq!(max_abs_diff(s.to_dense().as_ref(), m.as_ref()), 0.0);
    }

    #[test]
    fn sparse_products_match_dense() {
        let a = sample();
        let b = Mat::from_fn(3, 2, |i, j| c64::new((i * j) as f64, 1.0));
        let sa = CsrMatrix::from_dense(a.as_ref());
        let sb = CsrMatrix::from_dense(b.as_ref());
        let prod = sa.matmul(&sb).to_dense();
        assert!(max_abs_diff(prod.as_ref(), (&a * &b).as_ref()) < 1e-14);
        let k = sa.kron(&sb).to_dense();
        assert!(max_abs_diff(k.as_ref(), kron(a.as_ref(), b.as_ref()).as_ref()) < 1e-14);
        let x: Vec<c64> = (0..3).map(|i| c64::new(i as f64, -1.0)).collect();
        let y = sa.mul_vec(&x);
        for i in 0..3 {
            let expect: c64 = (0..3).map(|j| a[(i, j)] * x[j]).sum();
            assert!((y[i] - expect).norm() < 1e-14);
        }
        let adj = sa.adjoint().to_dense();
        assert!(max_abs_diff(adj.as_ref(), adjoint(a.as_ref()).as_ref()) < 1e-15);
    }

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let s = CsrMatrix::from_triplets(2, 2, [(0, 1, ONE), (0, 1, ONE), (1, 0, ONE), (1, 0, -ONE)]);
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.get(0, 1), c64::new(2.0, 0.0));
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let h = Mat::from_fn(3, 3, |i, j| {
            if i == j {
                c64::new(i as f64, 0.0)
            } else if i < j {
                c64::new(0.3, 0.2)
            } else {
                c64::new(0.3, -0.2)
            }
        });
        let e = hermitian_eigen(h.as_ref()).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let back = e.reconstruct_with(|x| x);
        assert!(max_abs_diff(back.as_ref(), h.as_ref()) < 1e-13);
    }
}
