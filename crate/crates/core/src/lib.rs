//! Steady states, Liouvillian spectra and steady-state susceptibilities of
//! open quantum systems described by Lindblad master equations.
//!
//! The crate covers the generic machinery (models, superoperators, direct
//! and time-evolution steady-state solvers, spectra, state metrics) and two
//! concrete systems: a dissipative XYZ spin lattice and a two-photon driven
//! Kerr oscillator. Parameter sweeps of the fidelity and trace-distance
//! susceptibilities and the scaling fits built on them live in [`sweep`]
//! and [`fit`].

pub mod density;
pub mod error;
pub mod fit;
pub mod kerr;
pub mod linalg;
pub mod lindblad;
pub mod metrics;
pub mod operators;
pub mod spectrum;
pub mod steady;
pub mod sweep;
pub mod symmetry;
pub mod xyz;

pub use density::{devectorize, vectorize, DensityMatrix, Vectorization};
pub use error::{Error, Result};
pub use faer::c64;
pub use fit::{fit_linear_extrapolate, fit_power_law, FitKind, FitParams, ScalingFit};
pub use kerr::{build_kerr_model, semiclassical_evolve, truncation_check, KerrParams, SemiclassicalState};
pub use lindblad::{build_liouvillian, Jump, LindbladModel, Superoperator};
pub use metrics::{
    fidelity, fidelity_susceptibility, trace_distance, trace_distance_susceptibility, SusceptibilityPoint,
};
pub use spectrum::{liouvillian_gap, liouvillian_spectrum, HowMany, LiouvilleSpectrum};
pub use steady::{steady_state_ed, steady_state_evolve, SolverKind, SteadyState};
pub use sweep::{interior_extrema, locate_extremum, sweep, Extremum, ModelFamily, SusceptibilityCurve};
pub use xyz::{
    build_xyz_model, critical_coupling, mf_steady_state, stability_map, stability_matrix, BlochVector, XYZParams,
};
