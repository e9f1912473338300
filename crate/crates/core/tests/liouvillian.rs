mod common;

use common::*;
use dissipative_core::density::{devectorize_mat, vectorize_mat};
use dissipative_core::kerr::{build_kerr_model, KerrParams};
use dissipative_core::linalg::{adjoint, max_abs_diff, trace};
use dissipative_core::spectrum::{liouvillian_gap, zero_threshold};
use dissipative_core::xyz::{build_xyz_model, XYZParams};
use dissipative_core::{build_liouvillian, c64, liouvillian_spectrum, HowMany};
use faer::Mat;

#[test]
fn superoperator_matches_direct_master_equation() {
    let mut r = rng(1);
    for n_jumps in 1..=3 {
        let model = random_model(&mut r, 4, n_jumps);
        let rho = random_state(&mut r, 4, 4);
        let direct = model.rhs_dense(rho.as_mat());
        let via_l = build_liouvillian(&model).apply_to(&rho).unwrap();
        assert!(max_abs_diff(direct.as_ref(), via_l.as_ref()) < 1e-12);
    }
}

#[test]
fn random_models_preserve_trace_and_hermiticity() {
    let mut r = rng(2);
    for d in [2, 3, 5] {
        let l = build_liouvillian(&random_model(&mut r, d, 2));
        assert!(l.trace_defect() < 1e-10);
        for _ in 0..5 {
            let rho = random_state(&mut r, d, d);
            let out = l.apply_to(&rho).unwrap();
            assert!(trace(out.as_ref()).norm() < 1e-10);
            assert!(max_abs_diff(out.as_ref(), adjoint(out.as_ref()).as_ref()) < 1e-10);

            // Hermitian but not a state
            let h = random_hermitian(&mut r, d);
            let out = devectorize_mat(&l.apply(&vectorize_mat(h.as_ref())), d).unwrap();
            assert!(max_abs_diff(out.as_ref(), adjoint(out.as_ref()).as_ref()) < 1e-10);
        }
    }
}

#[test]
fn dense_and_sparse_matvec_agree() {
    let mut r = rng(3);
    let l = build_liouvillian(&random_model(&mut r, 4, 2));
    let dense = l.densified();
    let v: Vec<c64> = (0..16).map(|_| gaussian(&mut r)).collect();
    let a = l.apply(&v);
    let b = dense.apply(&v);
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-12));

    let xyz = build_liouvillian(&build_xyz_model(&XYZParams::default()).unwrap());
    let v: Vec<c64> = (0..256).map(|_| gaussian(&mut r)).collect();
    let a = xyz.apply(&v);
    let b = xyz.densified().apply(&v);
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-12));
}

#[test]
fn xyz_liouvillian_is_trace_preserving() {
    let l = build_liouvillian(&build_xyz_model(&XYZParams::default()).unwrap());
    assert_eq!(l.dim(), 256);
    assert!(l.trace_defect() < 1e-10);
}

#[test]
fn random_spectra_come_in_conjugate_pairs() {
    let mut r = rng(4);
    for d in [2, 3, 4] {
        let spec = liouvillian_spectrum(&build_liouvillian(&random_model(&mut r, d, 2)), HowMany::All).unwrap();
        let eps = spec.zero_threshold;
        assert_eq!(spec.zero_multiplicity, 1);
        assert!(spec.eigenvalues[0].norm() <= eps);
        assert!(spec.eigenvalues.iter().all(|l| l.re <= eps));
        for l in &spec.eigenvalues {
            let partner = spec
                .eigenvalues
                .iter()
                .map(|m| (m - l.conj()).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(partner < 1e-9, "{l} has no conjugate partner");
        }
        assert!(spec.gap < 0.0);
    }
}

#[test]
fn xyz_spectrum_has_a_unique_zero() {
    let l = build_liouvillian(&build_xyz_model(&XYZParams::default()).unwrap());
    let spec = liouvillian_spectrum(&l, HowMany::All).unwrap();
    assert_eq!(spec.eigenvalues.len(), 256);
    assert_eq!(spec.zero_multiplicity, 1);
    assert!(spec
        .eigenvalues
        .iter()
        .all(|v| v.re <= zero_threshold(&spec.eigenvalues)));
}

#[test]
fn kerr_gap_closes_above_threshold() {
    // truncation sized for the larger drive, ⟨n⟩ ≈ 56
    let base = KerrParams::new(0.01, 1.5);
    let gap = |g: f64| liouvillian_gap(&build_liouvillian(&build_kerr_model(&base.with_g(g)).unwrap())).unwrap();
    let below = gap(0.5);
    let above = gap(1.5);
    assert!(below < -0.1);
    assert!(above.abs() < 1e-6 * below.abs(), "{above} vs {below}");
}

#[test]
fn iterative_spectrum_matches_dense() {
    let l = build_liouvillian(&build_kerr_model(&KerrParams::new(0.05, 1.3).with_n_max(20)).unwrap());
    assert!(l.dim() <= 1024);
    let dense = liouvillian_spectrum(&l, HowMany::All).unwrap();
    let opts = dissipative_core::spectrum::SpectrumOptions {
        dense_limit: 0,
        ..Default::default()
    };
    let iter = dissipative_core::spectrum::liouvillian_spectrum_with(&l, HowMany::Count(4), &opts).unwrap();
    assert!((dense.gap - iter.gap).abs() < 1e-8, "{} vs {}", dense.gap, iter.gap);
    let t = dissipative_core::trace_distance(&dense.steady_state, &iter.steady_state).unwrap();
    assert!(t < 1e-8);
}

#[test]
fn vec_identity_is_a_left_null_vector() {
    let mut r = rng(5);
    let model = random_model(&mut r, 3, 1);
    let l = build_liouvillian(&model).to_dense();
    let id = vectorize_mat(Mat::<c64>::identity(3, 3).as_ref());
    for col in 0..9 {
        let s: c64 = (0..9).map(|row| id[row].conj() * l[(row, col)]).sum();
        assert!(s.norm() < 1e-10);
    }
}
