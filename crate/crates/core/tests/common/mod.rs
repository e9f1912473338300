#![allow(dead_code)]

use dissipative_core::linalg::{hermitian_eigen, CsrMatrix};
use dissipative_core::{c64, DensityMatrix, Jump, LindbladModel};
use faer::Mat;
use rand::Rng;

pub fn gaussian(rng: &mut impl Rng) -> c64 {
    // Box-Muller
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    let r = (-2.0 * u.ln()).sqrt();
    c64::new(
        r * (std::f64::consts::TAU * v).cos(),
        r * (std::f64::consts::TAU * v).sin(),
    )
}

pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat<c64> {
    Mat::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Random mixed state of rank `rank` (full rank when `rank == d`).
pub fn random_state(rng: &mut impl Rng, d: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, d, rank);
    let m = &g * g.adjoint();
    DensityMatrix::from_unnormalized(m.as_ref()).unwrap()
}

pub fn random_hermitian(rng: &mut impl Rng, d: usize) -> Mat<c64> {
    let g = ginibre(rng, d, d);
    Mat::from_fn(d, d, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5)
}

pub fn random_unitary(rng: &mut impl Rng, d: usize) -> Mat<c64> {
    let h = random_hermitian(rng, d);
    let eig = hermitian_eigen(h.as_ref()).unwrap();
    let v = &eig.vectors;
    let phases = Mat::from_fn(d, d, |i, j| {
        if i == j {
            c64::from_polar(1.0, eig.values[i])
        } else {
            c64::new(0.0, 0.0)
        }
    });
    v * phases * v.adjoint()
}

pub fn random_model(rng: &mut impl Rng, d: usize, n_jumps: usize) -> LindbladModel {
    let h = random_hermitian(rng, d);
    let jumps = (0..n_jumps)
        .map(|_| Jump {
            operator: CsrMatrix::from_dense(ginibre(rng, d, d).as_ref()),
            rate: rng.random_range(0.1..2.0),
        })
        .collect();
    LindbladModel::new(CsrMatrix::from_dense(h.as_ref()), jumps).unwrap()
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
