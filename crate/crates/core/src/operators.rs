//! Spin-1/2 and truncated bosonic operators.
//!
//! Spin basis order is (|↑⟩, |↓⟩); on a lattice of `n` sites, site 0 is the
//! most significant tensor factor.

use faer::{c64, Mat};

use crate::linalg::{CsrMatrix, ONE, ZERO};

fn two_by_two(m: [[c64; 2]; 2]) -> Mat<c64> {
    Mat::from_fn(2, 2, |i, j| m[i][j])
}

pub fn sigma_x() -> Mat<c64> {
    two_by_two([[ZERO, ONE], [ONE, ZERO]])
}

pub fn sigma_y() -> Mat<c64> {
    let i = c64::new(0.0, 1.0);
    two_by_two([[ZERO, -i], [i, ZERO]])
}

pub fn sigma_z() -> Mat<c64> {
    two_by_two([[ONE, ZERO], [ZERO, -ONE]])
}

/// `σ⁻ = (σˣ − iσʸ)/2`, lowering |↑⟩ to |↓⟩.
pub fn sigma_minus() -> Mat<c64> {
    two_by_two([[ZERO, ZERO], [ONE, ZERO]])
}

pub fn sigma_plus() -> Mat<c64> {
    two_by_two([[ZERO, ONE], [ZERO, ZERO]])
}

/// Embeds a single-site operator at `site` of an `n_sites` chain.
pub fn site_operator(op: &Mat<c64>, site: usize, n_sites: usize) -> CsrMatrix {
    assert!(site < n_sites);
    let local = CsrMatrix::from_dense(op.as_ref());
    let left = CsrMatrix::identity(1 << site);
    let right = CsrMatrix::identity(1 << (n_sites - site - 1));
    left.kron(&local).kron(&right)
}

/// `⊗_j σᶻ_j`, diagonal with entries `(−1)^{#down}`.
pub fn spin_parity(n_sites: usize) -> CsrMatrix {
    let dim = 1usize << n_sites;
    CsrMatrix::from_triplets(
        dim,
        dim,
        (0..dim).map(|s| {
            let sign = if s.count_ones() % 2 == 0 { ONE } else { -ONE };
            (s, s, sign)
        }),
    )
}

/// Truncated annihilation operator on `n_max + 1` Fock levels,
/// `a|n⟩ = √n |n−1⟩`.
pub fn annihilation(n_max: usize) -> CsrMatrix {
    let dim = n_max + 1;
    CsrMatrix::from_triplets(dim, dim, (1..dim).map(|n| (n - 1, n, c64::new((n as f64).sqrt(), 0.0))))
}

pub fn number(n_max: usize) -> CsrMatrix {
    let dim = n_max + 1;
    CsrMatrix::from_triplets(dim, dim, (0..dim).map(|n| (n, n, c64::new(n as f64, 0.0))))
}

/// Photon-number parity `e^{iπ a†a} = diag((−1)ⁿ)`.
pub fn photon_parity(n_max: usize) -> CsrMatrix {
    let dim = n_max + 1;
    CsrMatrix::from_triplets(dim, dim, (0..dim).map(|n| (n, n, if n % 2 == 0 { ONE } else { -ONE })))
}
