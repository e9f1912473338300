//! Dissipative spin-1/2 XYZ model on a periodic square lattice.
//!
//! `H = Σ_⟨j,l⟩ Jx σˣ_j σˣ_l + Jy σʸ_j σʸ_l + Jz σᶻ_j σᶻ_l` with one `σ⁻_j`
//! decay channel of rate γ per site. Besides the full many-body model this
//! module holds the Gutzwiller mean-field dynamics, the momentum-resolved
//! linear stability of the all-down state, and the closed-form phase
//! boundary that follows from it.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CsrBuilder, CsrMatrix, ONE, ZERO};
use crate::lindblad::{Jump, LindbladModel};
use crate::symmetry::BasisSymmetry;

/// Largest lattice the many-body builder accepts.
pub const MAX_SITES: usize = 16;

/// How bonds across an extent-2 periodic direction are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondMultiplicity {
    /// Each unordered nearest-neighbour pair appears once.
    #[default]
    Unique,
    /// Direct and wrap-around bonds are both kept, so an extent-2 direction
    /// contributes every bond twice.
    Wrapped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XYZParams {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub gamma: f64,
    pub lx: usize,
    pub ly: usize,
    /// Coordination number used by the mean-field and stability analyses.
    pub coordination: usize,
    pub lattice_constant: f64,
    pub bonds: BondMultiplicity,
}

impl Default for XYZParams {
    fn default() -> Self {
        Self {
            jx: 0.9,
            jy: 1.0,
            jz: 1.0,
            gamma: 1.0,
            lx: 2,
            ly: 2,
            coordination: 4,
            lattice_constant: 1.0,
            bonds: BondMultiplicity::Unique,
        }
    }
}

impl XYZParams {
    pub fn lattice(lx: usize, ly: usize) -> Self {
        Self {
            lx,
            ly,
            ..Self::default()
        }
    }

    pub fn with_jy(&self, jy: f64) -> Self {
        Self { jy, ..self.clone() }
    }

    pub fn n_sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn validate(&self) -> Result<()> {
        if self.lx == 0 || self.ly == 0 {
            return Err(Error::InvalidArgument(format!("lattice {}x{}", self.lx, self.ly)));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma = {} must be positive",
                self.gamma
            )));
        }
        if ![self.jx, self.jy, self.jz, self.lattice_constant]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite coupling".into()));
        }
        Ok(())
    }

    fn site(&self, x: usize, y: usize) -> usize {
        (x % self.lx) + self.lx * (y % self.ly)
    }

    /// Nearest-neighbour bonds `(j, l)` with `j < l`, periodic in both
    /// directions. Extent-1 directions have no bonds.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for y in 0..self.ly {
            for x in 0..self.lx {
                let s = self.site(x, y);
                for t in [self.site(x + 1, y), self.site(x, y + 1)] {
                    if t == s {
                        continue;
                    }
                    let bond = (s.min(t), s.max(t));
                    if self.bonds == BondMultiplicity::Wrapped || seen.insert(bond) {
                        out.push(bond);
                    }
                }
            }
        }
        out
    }

    /// Site permutations generating the lattice automorphisms used for
    /// symmetry reduction: translations, reflections and, on square
    /// lattices, the diagonal mirror.
    pub fn site_permutations(&self) -> Vec<Vec<usize>> {
        let (lx, ly) = (self.lx, self.ly);
        let mut gens = Vec::new();
        let mut add = |f: &dyn Fn(usize, usize) -> usize| {
            let perm: Vec<usize> = (0..lx * ly).map(|s| f(s % lx, s / lx)).collect();
            if perm.iter().enumerate().any(|(i, &p)| i != p) {
                gens.push(perm);
            }
        };
        add(&|x, y| self.site(x + 1, y));
        add(&|x, y| self.site(x, y + 1));
        add(&|x, y| self.site(lx - x, y));
        add(&|x, y| self.site(x, ly - y));
        if lx == ly {
            add(&|x, y| self.site(y, x));
        }
        gens
    }
}

/// In-plane and longitudinal magnetization `(⟨σˣ⟩, ⟨σʸ⟩, ⟨σᶻ⟩)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl BlochVector {
    pub const DOWN: Self = Self {
        sx: 0.0,
        sy: 0.0,
        sz: -1.0,
    };

    pub fn new(sx: f64, sy: f64, sz: f64) -> Result<Self> {
        let b = Self { sx, sy, sz };
        if !(b.norm() <= 1.0 + 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "Bloch vector length {} exceeds 1",
                b.norm()
            )));
        }
        Ok(b)
    }

    /// Default mean-field seed, slightly tilted off the all-down state.
    pub fn tilted_seed() -> Self {
        let n = (0.1f64 * 0.1 + 0.1 * 0.1 + 0.99 * 0.99).sqrt();
        Self {
            sx: 0.1 / n,
            sy: 0.1 / n,
            sz: -0.99 / n,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.sx * self.sx + self.sy * self.sy + self.sz * self.sz).sqrt()
    }

    pub fn transverse(&self) -> f64 {
        self.sx.hypot(self.sy)
    }

    fn max_diff(&self, other: &Self) -> f64 {
        (self.sx - other.sx)
            .abs()
            .max((self.sy - other.sy).abs())
            .max((self.sz - other.sz).abs())
    }
}

/// Builds the many-body Lindblad model. Basis states are bit strings with
/// site 0 most significant; a set bit is a down spin.
pub fn build_xyz_model(params: &XYZParams) -> Result<LindbladModel> {
    params.validate()?;
    let n = params.n_sites();
    if n > MAX_SITES {
        return Err(Error::TooLarge(format!("{n} sites (limit {MAX_SITES})")));
    }
    let dim = 1usize << n;
    let bonds = params.bonds();
    let mask = |s: usize| 1usize << (n - 1 - s);

    let mut builder = CsrBuilder::new(dim, dim);
    let mut row = Vec::new();
    for i in 0..dim {
        row.clear();
        let mut diag = 0.0;
        for &(j, l) in &bonds {
            let (mj, ml) = (mask(j), mask(l));
            let aligned = ((i & mj) == 0) == ((i & ml) == 0);
            diag += if aligned { params.jz } else { -params.jz };
            // σˣσˣ and σʸσʸ both flip the pair; σʸσʸ carries −1 on aligned pairs
            let flip = params.jx + if aligned { -params.jy } else { params.jy };
            row.push((i ^ mj ^ ml, c64::new(flip, 0.0)));
        }
        row.push((i, c64::new(diag, 0.0)));
        builder.push_row(&mut row);
    }
    let hamiltonian = builder.finish();

    let jumps = (0..n)
        .map(|s| {
            let m = mask(s);
            let operator = CsrMatrix::from_triplets(dim, dim, (0..dim).filter(|i| i & m == 0).map(|i| (i | m, i, ONE)));
            Jump {
                operator,
                rate: params.gamma,
            }
        })
        .collect();
    Ok(LindbladModel::new(hamiltonian, jumps)?
        .with_label("Jx", params.jx)
        .with_label("Jy", params.jy)
        .with_label("Jz", params.jz)
        .with_label("gamma", params.gamma))
}

/// Lattice automorphisms lifted to basis permutations, plus the spin-flip
/// parity `⊗σᶻ`.
pub fn lattice_symmetry(params: &XYZParams) -> BasisSymmetry {
    let n = params.n_sites();
    let dim = 1usize << n;
    let generators = params
        .site_permutations()
        .into_iter()
        .map(|perm| {
            (0..dim)
                .map(|i| {
                    let mut out = 0usize;
                    for (s, &t) in perm.iter().enumerate() {
                        if i & (1 << (n - 1 - s)) != 0 {
                            out |= 1 << (n - 1 - t);
                        }
                    }
                    out
                })
                .collect()
        })
        .collect();
    BasisSymmetry {
        generators,
        parity: Some((0..dim).map(|i| i.count_ones() % 2 == 1).collect()),
    }
}

#[derive(Clone, Debug)]
pub struct MeanFieldOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Unit-time samples kept for the limit-cycle report.
    pub tail_len: usize,
}

impl Default for MeanFieldOptions {
    fn default() -> Self {
        Self {
            dt: 0.02,
            t_max: 1e6,
            tail_len: 20,
        }
    }
}

type Qubit = [[c64; 2]; 2];

fn bloch_of(r: &Qubit) -> BlochVector {
    BlochVector {
        sx: 2.0 * r[0][1].re,
        sy: -2.0 * r[0][1].im,
        sz: r[0][0].re - r[1][1].re,
    }
}

fn qubit_of(b: &BlochVector) -> Qubit {
    [
        [c64::new((1.0 + b.sz) / 2.0, 0.0), c64::new(b.sx / 2.0, -b.sy / 2.0)],
        [c64::new(b.sx / 2.0, b.sy / 2.0), c64::new((1.0 - b.sz) / 2.0, 0.0)],
    ]
}

/// Right-hand side of the self-consistent single-site master equation with
/// `H_mf = Σ_α 𝔷 J_α ⟨σᵅ⟩ σᵅ`.
fn mean_field_rhs(p: &XYZParams, r: &Qubit) -> Qubit {
    let m = bloch_of(r);
    let z = p.coordination as f64;
    let (hx, hy, hz) = (z * p.jx * m.sx, z * p.jy * m.sy, z * p.jz * m.sz);
    let h: Qubit = [
        [c64::new(hz, 0.0), c64::new(hx, -hy)],
        [c64::new(hx, hy), c64::new(-hz, 0.0)],
    ];
    let mut out = [[ZERO; 2]; 2];
    let mi = c64::new(0.0, -1.0);
    for i in 0..2 {
        for j in 0..2 {
            let comm = h[i][0] * r[0][j] + h[i][1] * r[1][j] - r[i][0] * h[0][j] - r[i][1] * h[1][j];
            out[i][j] = mi * comm;
        }
    }
    let g = p.gamma;
    out[0][0] -= r[0][0] * g;
    out[1][1] += r[0][0] * g;
    out[0][1] -= r[0][1] * (g / 2.0);
    out[1][0] -= r[1][0] * (g / 2.0);
    out
}

fn axpy(r: &Qubit, a: f64, k: &Qubit) -> Qubit {
    let mut out = *r;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] += k[i][j] * a;
        }
    }
    out
}

/// Integrates the Gutzwiller mean-field dynamics from `init` until Bloch
/// vectors one time unit apart differ by less than `conv_tol`.
pub fn mf_steady_state(params: &XYZParams, init: BlochVector, conv_tol: f64) -> Result<BlochVector> {
    mf_steady_state_with(params, init, conv_tol, &MeanFieldOptions::default())
}

pub fn mf_steady_state_with(
    params: &XYZParams,
    init: BlochVector,
    conv_tol: f64,
    opts: &MeanFieldOptions,
) -> Result<BlochVector> {
    params.validate()?;
    BlochVector::new(init.sx, init.sy, init.sz)?;
    if !(opts.dt > 0.0) || !(conv_tol > 0.0) {
        return Err(Error::InvalidArgument("dt and conv_tol must be positive".into()));
    }
    let substeps = (1.0 / opts.dt).ceil() as usize;
    let dt = 1.0 / substeps as f64;
    let mut r = qubit_of(&init);
    let mut prev = init;
    let mut tail = std::collections::VecDeque::with_capacity(opts.tail_len + 1);
    let mut t = 0.0;
    while t < opts.t_max {
        for _ in 0..substeps {
            let k1 = mean_field_rhs(params, &r);
            let k2 = mean_field_rhs(params, &axpy(&r, dt / 2.0, &k1));
            let k3 = mean_field_rhs(params, &axpy(&r, dt / 2.0, &k2));
            let k4 = mean_field_rhs(params, &axpy(&r, dt, &k3));
            for i in 0..2 {
                for j in 0..2 {
                    r[i][j] += (k1[i][j] + (k2[i][j] + k3[i][j]) * 2.0 + k4[i][j]) * (dt / 6.0);
                }
            }
        }
        t += 1.0;
        let now = bloch_of(&r);
        if !now.norm().is_finite() {
            return Err(Error::Divergence { t });
        }
        if now.max_diff(&prev) < conv_tol {
            return Ok(now);
        }
        tail.push_back(now);
        if tail.len() > opts.tail_len {
            tail.pop_front();
        }
        prev = now;
    }
    Err(Error::LimitCycle {
        t,
        tail: tail.into_iter().collect(),
    })
}

/// `t_k = 2cos(k_x a) + 2cos(k_y a)`
pub fn lattice_factor(params: &XYZParams, kx: f64, ky: f64) -> f64 {
    2.0 * (kx * params.lattice_constant).cos() + 2.0 * (ky * params.lattice_constant).cos()
}

fn stability_coefficients(params: &XYZParams, kx: f64, ky: f64) -> (c64, c64) {
    let t = lattice_factor(params, kx, ky);
    let z = params.coordination as f64;
    let p = c64::new(0.0, -((params.jx + params.jy) * t - 2.0 * z * params.jz));
    let q = c64::new(0.0, -(params.jx - params.jy) * t);
    (p, q)
}

/// Linearized generator of fluctuations with wave vector `k` around the
/// all-down state.
pub fn stability_matrix(params: &XYZParams, kx: f64, ky: f64) -> Mat<c64> {
    let (p, q) = stability_coefficients(params, kx, ky);
    let g = c64::new(params.gamma, 0.0);
    let half = g * 0.5;
    let mut m = Mat::<c64>::zeros(4, 4);
    m[(0, 0)] = -g;
    m[(1, 1)] = p - half;
    m[(1, 2)] = q;
    m[(2, 1)] = -q;
    m[(2, 2)] = -p - half;
    m[(3, 0)] = g;
    m
}

/// Eigenvalues of [`stability_matrix`]: `{0, −γ, −γ/2 ± √(P² − Q²)}`.
pub fn stability_eigenvalues(params: &XYZParams, kx: f64, ky: f64) -> [c64; 4] {
    let (p, q) = stability_coefficients(params, kx, ky);
    let s = (p * p - q * q).sqrt();
    let half = c64::new(-params.gamma / 2.0, 0.0);
    [ZERO, c64::new(-params.gamma, 0.0), half + s, half - s]
}

pub fn max_growth_rate(params: &XYZParams, kx: f64, ky: f64) -> f64 {
    stability_eigenvalues(params, kx, ky)
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Most unstable growth rate over a `resolution × resolution` grid on
/// `[−π, π]²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityMap {
    pub k: Vec<f64>,
    /// `values[iy][ix]` at `(k[ix], k[iy])`.
    pub values: Vec<Vec<f64>>,
    pub argmax: (f64, f64),
    pub max: f64,
}

pub const DEFAULT_K_RESOLUTION: usize = 101;

pub fn stability_map(params: &XYZParams, resolution: usize) -> Result<StabilityMap> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!("k-grid resolution {resolution} < 2")));
    }
    let step = 2.0 * PI / (resolution - 1) as f64;
    // symmetric construction keeps k and −k bitwise opposite
    let k: Vec<f64> = (0..resolution)
        .map(|i| {
            let j = i as f64 - (resolution - 1) as f64 / 2.0;
            j * step
        })
        .collect();
    let values: Vec<Vec<f64>> = k
        .iter()
        .map(|&ky| k.iter().map(|&kx| max_growth_rate(params, kx, ky)).collect())
        .collect();
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (iy, row) in values.iter().enumerate() {
        for (ix, &v) in row.iter().enumerate() {
            if v > best.0 {
                best = (v, ix, iy);
            }
        }
    }
    Ok(StabilityMap {
        argmax: (k[best.1], k[best.2]),
        max: best.0,
        k,
        values,
    })
}

/// Closed-form mean-field phase boundary
/// `J^c = γ² / (16 𝔷² (J_z − J_other)) + J_z`, where `J_other` is the
/// coupling held fixed (Jx when solving for Jy and vice versa).
pub fn critical_coupling(j_other: f64, jz: f64, coordination: usize, gamma: f64) -> Result<f64> {
    let gap = jz - j_other;
    if gap == 0.0 || coordination == 0 {
        return Err(Error::InvalidArgument(format!(
            "phase boundary diverges at Jz = {jz}, coupling = {j_other}, z = {coordination}"
        )));
    }
    let z = coordination as f64;
    Ok(gamma * gamma / (16.0 * z * z * gap) + jz)
}
