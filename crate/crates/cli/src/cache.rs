//! Content-addressed steady-state cache.
//!
//! Entries are keyed by a SHA-256 over the model's matrix entries and the
//! solver settings, and store the state bit for bit, so a hit reproduces the
//! cold result exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use dissipative_core::kerr::truncation_check;
use dissipative_core::linalg::CsrMatrix;
use dissipative_core::steady::SteadyState;
use dissipative_core::sweep::SteadyStateSource;
use dissipative_core::{build_liouvillian, c64, liouvillian_gap, DensityMatrix, LindbladModel, SolverKind};
use faer::Mat;
use sha2::{Digest, Sha256};

use crate::output::write_atomic;

/// Overrides the default cache directory.
pub const CACHE_DIR_ENV: &str = "DISSIPATIVE_CACHE_DIR";

const MAGIC: &[u8; 8] = b"DSSCACH1";
const GAP_SETTINGS: &str = "liouvillian-gap";

fn hash_matrix(h: &mut Sha256, m: &CsrMatrix) {
    h.update((m.nrows() as u64).to_le_bytes());
    h.update((m.nnz() as u64).to_le_bytes());
    for (i, j, v) in m.triplets() {
        h.update((i as u64).to_le_bytes());
        h.update((j as u64).to_le_bytes());
        h.update(v.re.to_bits().to_le_bytes());
        h.update(v.im.to_bits().to_le_bytes());
    }
}

/// Hex digest of the model matrices and the solver fingerprint.
pub fn model_key(model: &LindbladModel, settings: &str) -> String {
    let mut h = Sha256::new();
    h.update(MAGIC);
    h.update(settings.as_bytes());
    hash_matrix(&mut h, model.hamiltonian());
    for jump in model.jumps() {
        h.update(jump.rate.to_bits().to_le_bytes());
        hash_matrix(&mut h, &jump.operator);
    }
    hex::encode(h.finalize())
}

fn encode(s: &SteadyState) -> Vec<u8> {
    let d = s.state.dim();
    let mut out = Vec::with_capacity(48 + 16 * d * d);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.push(match s.method {
        SolverKind::Ed => 0,
        SolverKind::Rk4 => 1,
    });
    out.extend_from_slice(&s.residual.to_le_bytes());
    out.extend_from_slice(&s.time.to_le_bytes());
    out.extend_from_slice(&(s.steps as u64).to_le_bytes());
    let m = s.state.as_mat();
    for j in 0..d {
        for i in 0..d {
            out.extend_from_slice(&m[(i, j)].re.to_le_bytes());
            out.extend_from_slice(&m[(i, j)].im.to_le_bytes());
        }
    }
    out
}

fn decode(bytes: &[u8]) -> Option<SteadyState> {
    let mut rest = bytes.strip_prefix(MAGIC.as_slice())?;
    let mut take = |n: usize| -> Option<&[u8]> {
        if rest.len() < n {
            return None;
        }
        let (head, tail) = rest.split_at(n);
        rest = tail;
        Some(head)
    };
    let word = |b: &[u8]| u64::from_le_bytes(b.try_into().expect("8 bytes"));
    let d = word(take(8)?) as usize;
    let method = match take(1)?[0] {
        0 => SolverKind::Ed,
        1 => SolverKind::Rk4,
        _ => return None,
    };
    let residual = f64::from_bits(word(take(8)?));
    let time = f64::from_bits(word(take(8)?));
    let steps = word(take(8)?) as usize;
    let body = take(d.checked_mul(d)?.checked_mul(16)?)?;
    if !rest.is_empty() {
        return None;
    }
    let at = |k: usize| f64::from_bits(word(&body[8 * k..8 * k + 8]));
    let m = Mat::from_fn(d, d, |i, j| {
        let k = 2 * (j * d + i);
        c64::new(at(k), at(k + 1))
    });
    Some(SteadyState {
        state: DensityMatrix::new(m).ok()?,
        residual,
        method,
        time,
        steps,
    })
}

/// Wraps a solver with an optional on-disk cache and records the Fock-tail
/// population of every solved state when `tail_levels` is set.
pub struct CachedSource<'a> {
    inner: &'a dyn SteadyStateSource,
    dir: Option<PathBuf>,
    settings: String,
    tail_levels: Option<usize>,
    param_label: String,
    pub hits: AtomicUsize,
    pub misses: AtomicUsize,
    tails: Mutex<BTreeMap<u64, f64>>,
}

impl<'a> CachedSource<'a> {
    pub fn new(inner: &'a dyn SteadyStateSource, dir: Option<PathBuf>, settings: String) -> Self {
        Self {
            inner,
            dir,
            settings,
            tail_levels: None,
            param_label: String::new(),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            tails: Mutex::new(BTreeMap::new()),
        }
    }

    /// Records `truncation_check(ρ, levels)` keyed by the model label `param`.
    pub fn with_tails(mut self, param: &str, levels: usize) -> Self {
        self.tail_levels = Some(levels);
        self.param_label = param.to_owned();
        self
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Tail population recorded for the model with label value `p`.
    pub fn tail_at(&self, p: f64) -> Option<f64> {
        self.tails.lock().expect("tail map").get(&p.to_bits()).copied()
    }

    /// Liouvillian gap of `model`, read from or stored in the cache.
    pub fn gap(&self, model: &LindbladModel) -> dissipative_core::Result<f64> {
        let path = self
            .dir
            .as_ref()
            .map(|d| d.join(format!("{}.gap", model_key(model, GAP_SETTINGS))));
        if let Some(bytes) = path.as_ref().and_then(|p| fs::read(p).ok()) {
            if let Ok(b) = <[u8; 8]>::try_from(bytes.as_slice()) {
                return Ok(f64::from_le_bytes(b));
            }
        }
        let gap = liouvillian_gap(&build_liouvillian(model))?;
        if let Some(path) = &path {
            if let Err(e) = write_atomic(path, &gap.to_le_bytes()) {
                log::warn!("cache write failed: {e}");
            }
        }
        Ok(gap)
    }

    fn record_tail(&self, model: &LindbladModel, s: &SteadyState) {
        let (Some(levels), Some(&p)) = (self.tail_levels, model.labels().get(&self.param_label)) else {
            return;
        };
        if let Ok(t) = truncation_check(&s.state, levels) {
            self.tails.lock().expect("tail map").insert(p.to_bits(), t);
        }
    }
}

impl SteadyStateSource for CachedSource<'_> {
    fn steady_state(
        &self,
        model: &LindbladModel,
        warm: Option<&DensityMatrix>,
    ) -> dissipative_core::Result<SteadyState> {
        let path = self
            .dir
            .as_ref()
            .map(|d| d.join(format!("{}.bin", model_key(model, &self.settings))));
        if let Some(path) = &path {
            if let Some(s) = fs::read(path).ok().and_then(|b| decode(&b)) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                self.record_tail(model, &s);
                return Ok(s);
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let s = self.inner.steady_state(model, warm)?;
        if let Some(path) = &path {
            if let Err(e) = write_atomic(path, &encode(&s)) {
                log::warn!("cache write failed: {e}");
            }
        }
        self.record_tail(model, &s);
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dissipative_core::kerr::{build_kerr_model, KerrParams};
    use dissipative_core::steady::{steady_state_ed_with, EdOptions};

    #[test]
    fn encoding_is_lossless() {
        let model = build_kerr_model(&KerrParams::new(0.05, 1.3).with_n_max(12)).unwrap();
        let s = steady_state_ed_with(&build_liouvillian(&model), &EdOptions::default()).unwrap();
        let back = decode(&encode(&s)).unwrap();
        assert_eq!(back.state, s.state);
        assert_eq!(back.residual.to_bits(), s.residual.to_bits());
        assert_eq!(back.method, s.method);
        let mut bytes = encode(&s);
        bytes.pop();
        assert!(decode(&bytes).is_none());
    }

    #[test]
    fn keys_follow_content() {
        let a = build_kerr_model(&KerrParams::new(0.05, 1.3).with_n_max(12)).unwrap();
        let b = build_kerr_model(&KerrParams::new(0.05, 1.3 + 1e-12).with_n_max(12)).unwrap();
        assert_eq!(model_key(&a, "x"), model_key(&a.clone(), "x"));
        assert_ne!(model_key(&a, "x"), model_key(&b, "x"));
        assert_ne!(model_key(&a, "x"), model_key(&a, "y"));
        assert_eq!(model_key(&a, "x").len(), 64);
    }
}
