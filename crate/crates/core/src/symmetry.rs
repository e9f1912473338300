//! Symmetry-reduced steady-state solves.
//!
//! A unique steady state inherits every symmetry of the master equation. If
//! basis permutations `g` (lattice automorphisms) and a Z₂ parity `Π` leave
//! the generator invariant, then `ρ[a, b] = ρ[g a, g b]` and `ρ[a, b] = 0`
//! whenever `a` and `b` carry different parity. Grouping matrix elements
//! into orbits of index pairs leaves one unknown per even orbit, and the
//! equations `(𝓛ρ)[a, b] = 0` need only be imposed on one representative
//! per orbit.

use faer::c64;
use faer::sparse::Triplet;
use faer::Mat;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, ONE, ZERO};
use crate::lindblad::{LindbladModel, LiouvillianRows, Superoperator};
use crate::steady::{self, EdOptions, SolverKind, SteadyState};

const EXCLUDED: u32 = u32::MAX;

/// Symmetry generators acting on basis states.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BasisSymmetry {
    /// Each entry maps basis index `i` to `perm[i]`.
    pub generators: Vec<Vec<usize>>,
    /// Z₂ charge of each basis state (`true` = odd), if the model has one.
    pub parity: Option<Vec<bool>>,
}

/// Orbits of `(a, b)` index pairs under a [`BasisSymmetry`].
#[derive(Clone, Debug)]
pub struct PairOrbits {
    dim: usize,
    orbit_of: Vec<u32>,
    reps: Vec<usize>,
    sizes: Vec<usize>,
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let up = parent[parent[x as usize] as usize];
        parent[x as usize] = up;
        x = up;
    }
    x
}

impl PairOrbits {
    pub fn new(dim: usize, sym: &BasisSymmetry) -> Result<Self> {
        let n = dim
            .checked_mul(dim)
            .filter(|&n| n < EXCLUDED as usize)
            .ok_or_else(|| Error::TooLarge(format!("{dim}² index pairs")))?;
        for g in &sym.generators {
            let mut seen = vec![false; dim];
            if g.len() != dim || g.iter().any(|&i| i >= dim || std::mem::replace(&mut seen[i], true)) {
                return Err(Error::InvalidArgument("symmetry generator is not a permutation".into()));
            }
        }
        if let Some(p) = &sym.parity {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if sym.generators.iter().any(|g| (0..dim).any(|i| p[g[i]] != p[i])) {
                return Err(Error::InvalidArgument(
                    "symmetry generator does not preserve parity".into(),
                ));
            }
        }
        let mut parent: Vec<u32> = (0..n as u32).collect();
        for g in &sym.generators {
            for b in 0..dim {
                for a in 0..dim {
                    let x = find(&mut parent, (a + b * dim) as u32);
                    let y = find(&mut parent, (g[a] + g[b] * dim) as u32);
                    if x != y {
                        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
                        parent[hi as usize] = lo;
                    }
                }
            }
        }
        let mut orbit_of = vec![EXCLUDED; n];
        let mut reps = Vec::new();
        let mut sizes = Vec::new();
        for idx in 0..n {
            let (a, b) = (idx % dim, idx / dim);
            if let Some(p) = &sym.parity {
                if p[a] != p[b] {
                    continue;
                }
            }
            let root = find(&mut parent, idx as u32) as usize;
            // roots are the smallest index of their class, so they are met first
            if root == idx {
                orbit_of[idx] = reps.len() as u32;
                reps.push(idx);
                sizes.push(1);
            } else {
                let o = orbit_of[root];
                orbit_of[idx] = o;
                sizes[o as usize] += 1;
            }
        }
        Ok(Self {
            dim,
            orbit_of,
            reps,
            sizes,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of independent unknowns.
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn orbit(&self, a: usize, b: usize) -> Option<usize> {
        match self.orbit_of[a + b * self.dim] {
            EXCLUDED => None,
            o => Some(o as usize),
        }
    }

    /// Builds the full matrix from one value per orbit.
    pub fn expand(&self, values: &[c64]) -> Mat<c64> {
        assert_eq!(values.len(), self.len());
        Mat::from_fn(self.dim, self.dim, |a, b| self.orbit(a, b).map_or(ZERO, |o| values[o]))
    }
}

/// Direct steady-state solve restricted to the symmetric sector. The result
/// is checked against the full Liouvillian, so an invalid symmetry shows up
/// as a residual error rather than a wrong state.
pub fn steady_state_symmetric(model: &LindbladModel, orbits: &PairOrbits, opts: &EdOptions) -> Result<SteadyState> {
    let d = model.dim();
    if orbits.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: orbits.dim(),
        });
    }
    let rows = LiouvillianRows::new(model);
    let n = orbits.len();
    let trace_row = (0..d)
        .filter_map(|a| orbits.orbit(a, a))
        .min()
        .ok_or_else(|| Error::InvalidArgument("no diagonal orbit".into()))?;
    let mut trip = Vec::new();
    let mut buf = Vec::new();
    for (o, &rep) in orbits.reps.iter().enumerate() {
        if o == trace_row {
            continue;
        }
        rows.row_entries(rep % d, rep / d, &mut buf);
        for &(col, v) in &buf {
            if let Some(oc) = orbits.orbit(col % d, col / d) {
                trip.push(Triplet::new(o, oc, v));
            }
        }
    }
    for (o, &rep) in orbits.reps.iter().enumerate() {
        if rep % d == rep / d {
            trip.push(Triplet::new(trace_row, o, c64::new(orbits.sizes[o] as f64, 0.0)));
        }
    }
    let mut rhs = vec![ZERO; n];
    rhs[trace_row] = ONE;
    let x = steady::solve_sparse(n, &trip, &rhs)?;
    let state = DensityMatrix::from_unnormalized(orbits.expand(&x).as_ref())?;
    let residual = rows.residual_max(&crate::density::vectorize(&state));
    if !(residual <= opts.residual_tol) {
        return Err(Error::Residual {
            residual,
            tolerance: opts.residual_tol,
        });
    }
    Ok(SteadyState {
        state,
        residual,
        method: SolverKind::Ed,
        time: 0.0,
        steps: 0,
    })
}

/// `max |𝓛𝒰 − 𝒰𝓛|` for the conjugation superoperator `𝒰ρ = UρU†`.
pub fn symmetry_defect(l: &Superoperator, u: &CsrMatrix) -> Result<f64> {
    if u.nrows() != l.hilbert_dim() || u.ncols() != l.hilbert_dim() {
        return Err(Error::DimensionMismatch {
            expected: l.hilbert_dim(),
            got: u.nrows(),
        });
    }
    let s = u.conj().kron(u);
    let lm = l.to_sparse();
    let comm = lm.matmul(&s).sub(&s.matmul(&lm));
    Ok(comm.values().iter().map(|v| v.norm()).fold(0.0, f64::max))
}
