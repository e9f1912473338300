//! Liouvillian eigenvalues, steady state and gap.
//!
//! Small superoperators are diagonalized densely. Larger ones go through
//! shift-invert Arnoldi: the sparse LU of `𝓛 − σ` turns the eigenvalues
//! nearest the shift into the dominant ones of `(𝓛 − σ)⁻¹`.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};

use crate::density::{self, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, ZERO};
use crate::lindblad::Superoperator;

/// Liouville dimensions up to this size are diagonalized densely.
pub const DENSE_LIMIT: usize = 1024;

/// Relative zero threshold for eigenvalue classification.
pub const ZERO_REL: f64 = 1e-9;
/// Absolute floor of the zero threshold.
pub const ZERO_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HowMany {
    All,
    /// The given number of eigenvalues closest to the right edge of the
    /// spectrum.
    Count(usize),
}

#[derive(Clone, Debug)]
pub struct SpectrumOptions {
    /// Shift for the iterative path; should sit just right of the spectrum.
    pub shift: c64,
    /// Relative Ritz residual required for convergence.
    pub tol: f64,
    pub max_restarts: usize,
    pub dense_limit: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            shift: c64::new(1e-2, 0.0),
            tol: 1e-12,
            max_restarts: 60,
            dense_limit: DENSE_LIMIT,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LiouvilleSpectrum {
    /// Sorted by descending real part; `eigenvalues[0]` is `λ₀`.
    pub eigenvalues: Vec<c64>,
    pub steady_state: DensityMatrix,
    /// `Re λ₁`, the first eigenvalue outside the zero group.
    pub gap: f64,
    pub zero_multiplicity: usize,
    pub zero_threshold: f64,
}

pub fn zero_threshold(eigenvalues: &[c64]) -> f64 {
    let scale = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.re.abs()));
    (ZERO_REL * scale).max(ZERO_FLOOR)
}

pub fn liouvillian_spectrum(l: &Superoperator, how_many: HowMany) -> Result<LiouvilleSpectrum> {
    liouvillian_spectrum_with(l, how_many, &SpectrumOptions::default())
}

pub fn liouvillian_spectrum_with(
    l: &Superoperator,
    how_many: HowMany,
    opts: &SpectrumOptions,
) -> Result<LiouvilleSpectrum> {
    let n = l.dim();
    let (values, vectors) = match how_many {
        HowMany::All => {
            if n > 4 * opts.dense_limit {
                return Err(Error::TooLarge(format!(
                    "full spectrum of Liouville dimension {n}; request a count instead"
                )));
            }
            dense_eigen(l)?
        }
        HowMany::Count(k) if n <= opts.dense_limit => {
            let (mut vals, mut vecs) = dense_eigen(l)?;
            vals.truncate(k.max(2));
            vecs.truncate(k.max(2));
            (vals, vecs)
        }
        HowMany::Count(k) => {
            let (vals, vecs) = shift_invert_arnoldi(&l.to_sparse(), opts.shift, k.max(2), opts)?;
            sort_by_real_desc(vals, vecs)
        }
    };
    assemble(l.hilbert_dim(), values, vectors)
}

/// `Re λ₁`, also when it has fallen inside the zero threshold. A closed gap
/// makes [`liouvillian_spectrum`] report a degenerate steady state; here the
/// second member of that zero group is returned instead.
pub fn liouvillian_gap(l: &Superoperator) -> Result<f64> {
    match liouvillian_spectrum(l, HowMany::Count(4)) {
        Ok(spec) => Ok(spec.gap),
        Err(Error::DegenerateSteadyState { eigenvalues, .. }) => Ok(eigenvalues[1].re),
        Err(e) => Err(e),
    }
}

fn dense_eigen(l: &Superoperator) -> Result<(Vec<c64>, Vec<Vec<c64>>)> {
    let m = l.to_dense();
    let evd = m.eigen().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let n = m.nrows();
    let vals: Vec<c64> = (0..n).map(|i| evd.S()[i]).collect();
    let u = evd.U();
    let vecs = (0..n).map(|k| (0..n).map(|i| u[(i, k)]).collect()).collect();
    Ok(sort_by_real_desc(vals, vecs))
}

fn sort_by_real_desc(vals: Vec<c64>, vecs: Vec<Vec<c64>>) -> (Vec<c64>, Vec<Vec<c64>>) {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| {
        vals[b]
            .re
            .total_cmp(&vals[a].re)
            .then(vals[a].im.total_cmp(&vals[b].im))
    });
    let v = order.iter().map(|&i| vals[i]).collect();
    let w = order.iter().map(|&i| vecs[i].clone()).collect();
    (v, w)
}

fn assemble(d: usize, values: Vec<c64>, vectors: Vec<Vec<c64>>) -> Result<LiouvilleSpectrum> {
    let eps = zero_threshold(&values);
    let zeros: Vec<usize> = (0..values.len()).filter(|&i| values[i].re.abs() < eps).collect();
    if zeros.len() > 1 {
        let states = zeros
            .iter()
            .map(|&i| density::devectorize_mat(&vectors[i], d))
            .collect::<Result<_>>()?;
        return Err(Error::DegenerateSteadyState {
            eigenvalues: zeros.iter().map(|&i| values[i]).collect(),
            states,
        });
    }
    if zeros.is_empty() || zeros[0] != 0 {
        return Err(Error::Eigensolver(format!(
            "no eigenvalue within {eps:e} of zero at the top of the spectrum (λ₀ = {})",
            values.first().copied().unwrap_or(ZERO)
        )));
    }
    let steady_state = DensityMatrix::from_unnormalized(density::devectorize_mat(&vectors[0], d)?.as_ref())?;
    let gap = values.get(1).map_or(f64::NEG_INFINITY, |l| l.re);
    Ok(LiouvilleSpectrum {
        eigenvalues: values,
        steady_state,
        gap,
        zero_multiplicity: 1,
        zero_threshold: eps,
    })
}

fn dot(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[c64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenpairs of `a` nearest `shift`, via Arnoldi on `(a − shift)⁻¹` with
/// explicit restarts.
pub fn shift_invert_arnoldi(
    a: &CsrMatrix,
    shift: c64,
    nev: usize,
    opts: &SpectrumOptions,
) -> Result<(Vec<c64>, Vec<Vec<c64>>)> {
    let n = a.nrows();
    if nev == 0 || nev >= n {
        return Err(Error::InvalidArgument(format!(
            "cannot extract {nev} of {n} eigenvalues"
        )));
    }
    let shifted = a.sub(&CsrMatrix::identity(n).scale(shift)).to_faer()?;
    let lu = shifted
        .sp_lu()
        .map_err(|e| Error::LinearSolve(format!("shifted LU: {e:?}")))?;
    let apply = |x: &[c64]| -> Vec<c64> {
        let mut rhs = Mat::from_fn(n, 1, |i, _| x[i]);
        lu.solve_in_place(rhs.as_mut());
        (0..n).map(|i| rhs[(i, 0)]).collect()
    };

    let m = (2 * nev + 20).max(40).min(n);
    let mut start: Vec<c64> = (0..n)
        .map(|i| {
            let t = i as f64 + 1.0;
            c64::new(1.0 + (0.7 * t).sin() * 0.5, (1.3 * t).cos() * 0.5)
        })
        .collect();

    for _restart in 0..=opts.max_restarts {
        let s = norm(&start);
        let mut basis: Vec<Vec<c64>> = vec![start.iter().map(|z| z / s).collect()];
        let mut h = Mat::<c64>::zeros(m + 1, m);
        let mut size = m;
        for j in 0..m {
            let mut w = apply(&basis[j]);
            // two passes of classical Gram-Schmidt
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    h[(i, j)] += c;
                    w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= c * vk);
                }
            }
            let beta = norm(&w);
            h[(j + 1, j)] = c64::new(beta, 0.0);
            let scale = (0..=j).map(|i| h[(i, j)].norm()).fold(beta, f64::max);
            if beta <= 1e-13 * scale {
                size = j + 1;
                break;
            }
            basis.push(w.iter().map(|z| z / beta).collect());
        }

        let hm = h.as_ref().submatrix(0, 0, size, size).to_owned();
        let evd = hm.eigen().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let mut ritz: Vec<(c64, Vec<c64>)> = (0..size)
            .map(|k| {
                let y: Vec<c64> = (0..size).map(|i| evd.U()[(i, k)]).collect();
                let ny = norm(&y);
                (evd.S()[k], y.iter().map(|z| z / ny).collect())
            })
            .collect();
        ritz.sort_by(|a, b| b.0.norm().total_cmp(&a.0.norm()));
        let beta = if size < m || size == n {
            0.0
        } else {
            h[(size, size - 1)].norm()
        };
        let take = nev.min(size);
        let converged = ritz[..take]
            .iter()
            .all(|(theta, y)| beta * y[size - 1].norm() <= opts.tol * theta.norm());

        let lift = |y: &[c64]| -> Vec<c64> {
            let mut x = vec![ZERO; n];
            for (coef, v) in y.iter().zip(&basis) {
                x.iter_mut().zip(v).for_each(|(xk, vk)| *xk += coef * vk);
            }
            x
        };
        if converged {
            let vals = ritz[..take].iter().map(|(t, _)| shift + t.inv()).collect();
            let vecs = ritz[..take].iter().map(|(_, y)| lift(y)).collect();
            return Ok((vals, vecs));
        }
        start = vec![ZERO; n];
        for (_, y) in &ritz[..take] {
            let x = lift(y);
            let nx = norm(&x);
            start.iter_mut().zip(&x).for_each(|(s, xk)| *s += xk / nx);
        }
    }
    Err(Error::Eigensolver(format!(
        "shift-invert Arnoldi did not converge after {} restarts",
        opts.max_restarts
    )))
}
