use faer::{c64, Mat};
use thiserror::Error;

use crate::density::DensityMatrix;
use crate::xyz::BlochVector;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    /// More than one eigenvalue of the Liouvillian sits within the zero
    /// threshold. The near-zero eigenvectors are returned unnormalized
    /// (devectorized) so the caller can pick a state.
    #[error("degenerate steady state: {} eigenvalues within the zero threshold", .eigenvalues.len())]
    DegenerateSteadyState {
        eigenvalues: Vec<c64>,
        states: Vec<Mat<c64>>,
    },

    #[error("steady-state residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("clamped negative eigenvalue mass {0:e} exceeds 1e-8")]
    NegativeMass(f64),

    #[error("time evolution did not converge by t = {t}: last trace distance {residual:e}")]
    NotConverged {
        t: f64,
        residual: f64,
        last: Option<Box<DensityMatrix>>,
    },

    #[error("integration unstable at t = {t} (trace deviation {deviation:e}); retry with dt <= {suggested_dt:e}")]
    StepInstability { t: f64, deviation: f64, suggested_dt: f64 },

    #[error("mean-field dynamics did not settle by t = {t} (possible limit cycle)")]
    LimitCycle { t: f64, tail: Vec<BlochVector> },

    #[error("semiclassical amplitude diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("every (m, n) pair fell below the eigenvalue cutoff")]
    RankCollapse,

    #[error("extremum at the grid boundary (p = {p}); widen the grid")]
    BoundaryExtremum { p: f64 },

    #[error("not enough valid points: need {needed}, have {have}")]
    InsufficientData { needed: usize, have: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
