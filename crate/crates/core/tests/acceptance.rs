//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` do not hold for this implementation
//! (see README); they still run and report FAIL, but only an unexpected
//! failure makes the process exit nonzero.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{random_state, random_unitary, rng};
use dissipative_core::fit::{fit_linear_extrapolate, fit_power_law, FitParams};
use dissipative_core::kerr::{semiclassical_evolve, semiclassical_photons};
use dissipative_core::linalg::{adjoint, hermitian_eigenvalues, max_abs_diff, trace};
use dissipative_core::metrics::DEFAULT_EPS_CUT;
use dissipative_core::spectrum::liouvillian_gap;
use dissipative_core::steady::{steady_state_ed_with, steady_state_evolve_with, EdOptions, EvolveOptions};
use dissipative_core::sweep::{
    grid, interior_extrema, locate_extremum, locate_in_series, sweep, two_pass_sweep, Extremum, KerrFamily, MetricSet,
    Solver, SolverChoice, SweepOptions, XyzFamily, DELTA_CHI_F, DELTA_CHI_T,
};
use dissipative_core::xyz::{max_growth_rate, mf_steady_state, BlochVector, DEFAULT_K_RESOLUTION};
use dissipative_core::{
    build_kerr_model, build_liouvillian, build_xyz_model, critical_coupling, fidelity, fidelity_susceptibility,
    stability_map, trace_distance, trace_distance_susceptibility, DensityMatrix, KerrParams, LindbladModel,
    ModelFamily, SolverKind, SteadyState, SusceptibilityCurve, XYZParams,
};

const KNOWN_FAILURES: [u32; 3] = [4, 5, 6];

struct Report {
    id: u32,
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Context {
    curves: Vec<SusceptibilityCurve>,
}

type Outcome = Result<(bool, String), String>;

fn xyz_family(lx: usize, ly: usize) -> (XyzFamily, Solver) {
    let family = XyzFamily::jy(XYZParams::lattice(lx, ly));
    let solver = Solver::for_family(SolverChoice::Auto, &family).expect("lattice symmetry");
    (family, solver)
}

fn only(metrics: MetricSet) -> SweepOptions {
    SweepOptions {
        metrics,
        ..Default::default()
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn c1() -> Outcome {
    let jc = critical_coupling(0.9, 1.0, 4, 1.0).map_err(err)?;
    let p = XYZParams::default().with_jy(jc);
    let growth = max_growth_rate(&p, 0.0, 0.0);
    let pass = (jc - 1.0390625).abs() <= 1e-9 && growth.abs() <= 1e-9;
    Ok((pass, format!("Jy_c = {jc:.10}, max Re eig at k=0 = {growth:.2e}")))
}

fn c2() -> Outcome {
    let at = |jy: f64| -> Result<f64, String> {
        let b = mf_steady_state(&XYZParams::default().with_jy(jy), BlochVector::tilted_seed(), 1e-10).map_err(err)?;
        Ok(b.sx.abs().max(b.sy.abs()))
    };
    let below = at(0.95)?;
    let above = at(1.06)?;
    let jc = critical_coupling(0.9, 1.0, 4, 1.0).map_err(err)?;
    let mut onset = None;
    for i in 0..=20 {
        let jy = 1.03 + i as f64 * 1e-3;
        if at(jy)? > 1e-3 {
            onset = Some(jy);
            break;
        }
    }
    let onset = onset.ok_or("no onset in [1.03, 1.05]")?;
    let pass = below <= 1e-6 && above >= 1e-2 && (onset - jc).abs() <= 2e-3;
    Ok((
        pass,
        format!("max|s_xy|(0.95) = {below:.1e}, max|s_xy|(1.06) = {above:.3}, onset {onset:.3} vs {jc:.4}"),
    ))
}

fn c3() -> Outcome {
    let map = stability_map(&XYZParams::default().with_jy(1.06), DEFAULT_K_RESOLUTION).map_err(err)?;
    let hand = -0.5 + 0.384f64.sqrt();
    let pass = map.argmax == (0.0, 0.0) && (map.max - hand).abs() <= 1e-6;
    Ok((
        pass,
        format!("argmax {:?}, max {:.7} vs hand value {hand:.7}", map.argmax, map.max),
    ))
}

fn max_rel_diff(a: &SusceptibilityCurve, b: &SusceptibilityCurve, from: f64) -> f64 {
    a.points
        .iter()
        .zip(&b.points)
        .filter(|(x, _)| x.p >= from - 1e-12)
        .filter_map(|(x, y)| Some((x.chi_f? - y.chi_f?).abs() / y.chi_f?.abs()))
        .fold(0.0, f64::max)
}

fn c4(ctx: &mut Context) -> Outcome {
    let (family, solver) = xyz_family(2, 2);
    let g = grid(0.9, 1.1, 0.005).map_err(err)?;
    let coarse = sweep(&family, &solver, &g, 1e-3, &only(MetricSet::CHI_F)).map_err(err)?;
    let fine = sweep(&family, &solver, &g, 1e-4, &only(MetricSet::BOTH)).map_err(err)?;
    let worst = max_rel_diff(&coarse, &fine, 0.9);
    let worst_p = coarse
        .points
        .iter()
        .zip(&fine.points)
        .max_by(|(a, b), (c, d)| {
            let r = |x: &dissipative_core::SusceptibilityPoint, y: &dissipative_core::SusceptibilityPoint| {
                (x.chi_f.unwrap_or(0.0) - y.chi_f.unwrap_or(0.0)).abs() / y.chi_f.unwrap_or(1.0).abs()
            };
            r(a, b).total_cmp(&r(c, d))
        })
        .map(|(a, _)| a.p)
        .unwrap_or(f64::NAN);
    let tail = max_rel_diff(&coarse, &fine, 0.97);
    ctx.curves.push(coarse);
    ctx.curves.push(fine);
    Ok((
        worst <= 0.02,
        format!(
            "max rel diff {:.1}% at Jy = {worst_p:.3}; over [0.97, 1.1]: {:.2}%",
            worst * 100.0,
            tail * 100.0
        ),
    ))
}

fn extremum_value(curve: &SusceptibilityCurve, which: Extremum) -> (usize, Option<f64>, f64) {
    let n = interior_extrema(curve, which).len();
    let loc = locate_extremum(curve, which).ok();
    let raw = curve
        .points
        .iter()
        .filter_map(|pt| match which {
            Extremum::MinChiF => pt.chi_f.map(|v| -v),
            Extremum::MaxChiT => pt.chi_t,
        })
        .fold(f64::NEG_INFINITY, f64::max);
    (n, loc.map(|l| l.p_star), raw)
}

fn c5(ctx: &mut Context) -> Outcome {
    let g = grid(0.9, 1.1, 0.005).map_err(err)?;
    let mut lines = Vec::new();
    let mut unique = true;
    let mut heights = Vec::new();
    let mut valleys = Vec::new();
    for (lx, ly) in [(2, 2), (2, 3)] {
        let (family, solver) = xyz_family(lx, ly);
        let f = sweep(&family, &solver, &g, DELTA_CHI_F, &only(MetricSet::CHI_F)).map_err(err)?;
        let t = sweep(&family, &solver, &g, DELTA_CHI_T, &only(MetricSet::CHI_T)).map_err(err)?;
        let (nf, pf, hf) = extremum_value(&f, Extremum::MinChiF);
        let (nt, pt, ht) = extremum_value(&t, Extremum::MaxChiT);
        unique &= nf == 1 && pf.is_some() && nt == 1 && pt.is_some();
        lines.push(format!(
            "{lx}x{ly}: {nf} chi_F minima (global {:.2} at {:?}), {nt} chi_T maxima (global {ht:.3} at {:?})",
            -hf,
            pf.map(|p| (p * 1e4).round() / 1e4),
            pt.map(|p| (p * 1e4).round() / 1e4)
        ));
        heights.push((hf, ht));
        let valley: Vec<(f64, f64)> = f
            .points
            .iter()
            .filter(|pt| pt.p >= 0.95 - 1e-12)
            .filter_map(|pt| Some((pt.p, pt.chi_f?)))
            .collect();
        valleys.push(locate_in_series(&valley, true).map_err(err)?.chi_star);
        ctx.curves.push(f);
        ctx.curves.push(t);
    }
    let ordered = heights[1].0 > heights[0].0 && heights[1].1 > heights[0].1;
    lines.push(format!(
        "size ordering holds: {ordered} (valley on [0.95, 1.1] only: {:.2} vs {:.2})",
        valleys[0], valleys[1]
    ));
    Ok((unique && ordered, lines.join("; ")))
}

fn c6(ctx: &mut Context) -> Outcome {
    let mut inv_n = Vec::new();
    let mut ns = Vec::new();
    let mut p_star = Vec::new();
    let mut depth = Vec::new();
    for (lx, ly) in [(2, 2), (2, 3), (3, 3)] {
        let (family, solver) = xyz_family(lx, ly);
        let r = two_pass_sweep(
            &family,
            &solver,
            (0.95, 1.1),
            0.01,
            0.001,
            DELTA_CHI_F,
            Extremum::MinChiF,
            &only(MetricSet::CHI_F),
        )
        .map_err(err)?;
        let n = (lx * ly) as f64;
        inv_n.push(1.0 / n);
        ns.push(n);
        p_star.push(r.extremum.p_star);
        depth.push(-r.extremum.chi_star);
        ctx.curves.push(r.coarse);
        ctx.curves.push(r.fine);
    }
    let (_, jc) = fit_linear_extrapolate(&inv_n, &p_star, 0.0).map_err(err)?;
    let fit = fit_power_law(&ns, &depth).map_err(err)?;
    let FitParams::PowerLaw { eta, kappa } = fit.params else {
        return Err("unexpected fit kind".into());
    };
    let extrapolates = (jc - 1.05).abs() <= 0.03;
    let eta_ok = (0.6..=1.1).contains(&eta);
    Ok((
        extrapolates && eta_ok,
        format!(
            "Jy(chi_F min) = {:?} for N = 4, 6, 9; 1/N -> 0 gives {jc:.4} (ok: {extrapolates}); |chi_F min| = {:?}, eta = {eta:.3}, kappa = {kappa:.3} (ok: {eta_ok})",
            p_star.iter().map(|p| (p * 1e4).round() / 1e4).collect::<Vec<_>>(),
            depth.iter().map(|d| (d * 100.0).round() / 100.0).collect::<Vec<_>>(),
        ),
    ))
}

fn c7() -> Outcome {
    let mut worst: f64 = 0.0;
    for u in [1.0 / 20.0, 1.0 / 60.0] {
        for g in [1.2, 1.5, 2.0] {
            let s = semiclassical_evolve(&KerrParams::new(u, g), dissipative_core::c64::new(0.1, 0.1), 1e-12)
                .map_err(err)?;
            worst = worst.max((s.photons() - semiclassical_photons(u, g, 1.0)).abs());
        }
    }
    let below = semiclassical_evolve(&KerrParams::new(0.05, 0.8), dissipative_core::c64::new(0.1, 0.1), 1e-12)
        .map_err(err)?
        .photons();
    let mut onset = None;
    for i in 0..=40 {
        let g = 0.98 + i as f64 * 1e-3;
        let s = semiclassical_evolve(&KerrParams::new(0.05, g), dissipative_core::c64::new(0.1, 0.1), 1e-12)
            .map_err(err)?;
        if s.photons() > 1e-3 {
            onset = Some(g);
            break;
        }
    }
    let onset = onset.ok_or("no onset in [0.98, 1.02]")?;
    let pass = worst <= 1e-6 && below <= 1e-12 && (onset - 1.0).abs() <= 1e-3 + 1e-12;
    Ok((
        pass,
        format!("max |n - n_analytic| = {worst:.1e}, n(G=0.8) = {below:.1e}, onset G = {onset:.3}"),
    ))
}

fn c8(ctx: &mut Context) -> Outcome {
    let us = [1.0 / 20.0, 1.0 / 40.0, 1.0 / 60.0];
    let mut lines = Vec::new();
    let mut gaps_ok = true;
    let mut g_f = Vec::new();
    let mut g_t = Vec::new();
    for (i, &u) in us.iter().enumerate() {
        let base = KerrParams::new(u, 1.6);
        if i < 2 {
            let gap = |g: f64| {
                liouvillian_gap(&build_liouvillian(&build_kerr_model(&base.with_g(g)).map_err(err)?)).map_err(err)
            };
            let (lo, hi) = (gap(0.5)?, gap(1.5)?);
            gaps_ok &= lo.abs() >= 5.0 * hi.abs();
            lines.push(format!("U=1/{:.0}: gap {lo:.4} -> {hi:.2e}", 1.0 / u));
        }
        let family = KerrFamily { base };
        let solver = Solver::for_family(SolverChoice::Auto, &family).map_err(err)?;
        let f = two_pass_sweep(
            &family,
            &solver,
            (0.8, 1.6),
            0.01,
            0.001,
            1e-3,
            Extremum::MinChiF,
            &only(MetricSet::CHI_F),
        )
        .map_err(err)?;
        let t = two_pass_sweep(
            &family,
            &solver,
            (0.8, 1.6),
            0.01,
            0.001,
            DELTA_CHI_T,
            Extremum::MaxChiT,
            &only(MetricSet::CHI_T),
        )
        .map_err(err)?;
        if i == 0 {
            // δG convergence at the valley
            let p = f.extremum.p_star;
            let at = |q: f64| -> Result<DensityMatrix, String> {
                use dissipative_core::sweep::SteadyStateSource;
                Ok(solver
                    .steady_state(&family.build(q).map_err(err)?, None)
                    .map_err(err)?
                    .state)
            };
            let r0 = at(p)?;
            let a = fidelity_susceptibility(&r0, &at(p + 1e-3)?, 1e-3, DEFAULT_EPS_CUT).map_err(err)?;
            let b = fidelity_susceptibility(&r0, &at(p + 1e-4)?, 1e-4, DEFAULT_EPS_CUT).map_err(err)?;
            lines.push(format!(
                "dG 1e-3 vs 1e-4 at the valley: {:.2}%",
                100.0 * (a - b).abs() / b.abs()
            ));
        }
        g_f.push(f.extremum.p_star);
        g_t.push(t.extremum.p_star);
        ctx.curves.extend([f.coarse, f.fine, t.coarse, t.fine]);
    }
    let shifts = g_f.windows(2).all(|w| w[1] < w[0]) && g_t.windows(2).all(|w| w[1] < w[0]);
    let (_, gc) = fit_linear_extrapolate(&us, &g_f, 0.0).map_err(err)?;
    let extrapolates = (gc - 1.04).abs() <= 0.05;
    lines.push(format!(
        "G(chi_F min) = {g_f:.4?}, G(chi_T max) = {g_t:.4?}, U -> 0 gives {gc:.4}"
    ));
    Ok((gaps_ok && shifts && extrapolates, lines.join("; ")))
}

fn c9() -> Outcome {
    let (kappa, eta) = (1.5230, 0.8786);
    let xs = [4.0, 6.0, 9.0, 12.0];
    let ys: Vec<f64> = xs.iter().map(|x: &f64| kappa * x.powf(eta)).collect();
    let FitParams::PowerLaw { kappa: k, eta: e } = fit_power_law(&xs, &ys).map_err(err)?.params else {
        return Err("unexpected fit kind".into());
    };
    let lx = [0.25, 1.0 / 6.0, 1.0 / 9.0];
    let ly: Vec<f64> = lx.iter().map(|x| 1.05 - 0.37 * x).collect();
    let (fit, y0) = fit_linear_extrapolate(&lx, &ly, 0.0).map_err(err)?;
    let interp = fit.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let pass = (k - kappa).abs() <= 1e-9 && (e - eta).abs() <= 1e-9 && (y0 - 1.05).abs() <= 1e-12 && interp <= 1e-12;
    Ok((
        pass,
        format!(
            "|dkappa| = {:.1e}, |deta| = {:.1e}, line residual {interp:.1e}",
            (k - kappa).abs(),
            (e - eta).abs()
        ),
    ))
}

fn c10(ctx: &Context) -> Outcome {
    let mut r = rng(2024);
    let mut violations = Vec::new();
    let mut samples = 0;
    for d in [2, 4, 8] {
        let states: Vec<DensityMatrix> = (0..200).map(|i| random_state(&mut r, d, 1 + i % d)).collect();
        for i in 0..200 {
            let (a, b, c) = (&states[i], &states[(i + 1) % 200], &states[(i + 7) % 200]);
            let u = random_unitary(&mut r, d);
            let ua = a.conjugate_by(u.as_ref()).map_err(err)?;
            let ub = b.conjugate_by(u.as_ref()).map_err(err)?;
            let f = fidelity(a, b).map_err(err)?;
            let t = trace_distance(a, b).map_err(err)?;
            let checks = [
                ("F range", (0.0..=1.0).contains(&f)),
                ("F(a,a)", (fidelity(a, a).map_err(err)? - 1.0).abs() <= 1e-9),
                ("F symmetry", (f - fidelity(b, a).map_err(err)?).abs() <= 1e-9),
                ("F unitary", (f - fidelity(&ua, &ub).map_err(err)?).abs() <= 1e-9),
                ("T >= 0", t >= 0.0),
                ("T symmetry", (t - trace_distance(b, a).map_err(err)?).abs() <= 1e-12),
                (
                    "T triangle",
                    trace_distance(a, c).map_err(err)? <= t + trace_distance(b, c).map_err(err)? + 1e-12,
                ),
                ("T unitary", (t - trace_distance(&ua, &ub).map_err(err)?).abs() <= 1e-9),
            ];
            samples += 1;
            for (name, ok) in checks {
                if !ok {
                    violations.push(format!("{name} (d={d}, i={i})"));
                }
            }
        }
    }

    let mut sweep_points = 0;
    for c in &ctx.curves {
        for pt in &c.points {
            sweep_points += 1;
            if pt.chi_f.is_some_and(|v| v > 0.0) || pt.chi_t.is_some_and(|v| v < 0.0) {
                violations.push(format!("sign at {} = {} in {}", c.param_name, pt.p, c.model_id));
            }
        }
    }

    let diag2 = |a: f64| DensityMatrix::diagonal(&[a, 1.0 - a]).expect("valid");
    for (a, eps, dp) in [
        (0.3, 2e-4, 1e-3),
        (0.5, 1e-5, 1e-4),
        (0.1, -3e-4, 1e-3),
        (0.85, 5e-5, 1e-3),
    ] {
        let chi = fidelity_susceptibility(&diag2(a), &diag2(a + eps), dp, DEFAULT_EPS_CUT).map_err(err)?;
        let expect = -(eps / dp).powi(2) * (1.0 / (8.0 * a) + 1.0 / (8.0 * (1.0 - a)));
        let chi_t = trace_distance_susceptibility(&diag2(a), &diag2(a + eps), dp).map_err(err)?;
        if (chi - expect).abs() > 1e-9 * expect.abs().max(1.0) || (chi_t - eps.abs() / dp).abs() > 1e-9 {
            violations.push(format!("two-level oracle at a = {a}"));
        }
    }
    Ok((
        violations.is_empty(),
        format!(
            "{samples} random pairs, {sweep_points} sweep points, 4 two-level oracles; violations: {:?}",
            violations.iter().take(5).collect::<Vec<_>>()
        ),
    ))
}

fn state_invariants(model: &LindbladModel, s: &SteadyState) -> bool {
    let m = s.state.as_mat();
    let tr = trace(m);
    let psd = hermitian_eigenvalues(m).is_ok_and(|v| v.iter().all(|&l| l >= -1e-10));
    let bound = if s.method == SolverKind::Ed { 1e-9 } else { 1e-8 };
    (tr.re - 1.0).abs() <= 1e-10
        && tr.im.abs() <= 1e-10
        && max_abs_diff(m, adjoint(m).as_ref()) <= 1e-10
        && psd
        && build_liouvillian(model).residual(&s.state) <= bound
}

fn c11(ctx: &Context) -> Outcome {
    let mut worst_t: f64 = 0.0;
    let mut bad = Vec::new();
    let mut models: Vec<(String, LindbladModel, DensityMatrix)> = Vec::new();
    for jy in [0.95, 1.0, 1.05] {
        let model = build_xyz_model(&XYZParams::default().with_jy(jy)).map_err(err)?;
        let mut pops = vec![0.0; 16];
        pops[15] = 1.0;
        models.push((
            format!("xyz 2x2 Jy={jy}"),
            model,
            DensityMatrix::diagonal(&pops).map_err(err)?,
        ));
    }
    for g in [0.8, 1.2, 1.6] {
        let model = build_kerr_model(&KerrParams::new(0.05, g).with_n_max(15)).map_err(err)?;
        let mut pops = vec![0.0; 16];
        pops[0] = 1.0;
        models.push((
            format!("kerr n_max=15 G={g}"),
            model,
            DensityMatrix::diagonal(&pops).map_err(err)?,
        ));
    }
    for (name, model, seed) in &models {
        let l = build_liouvillian(model);
        let a = steady_state_ed_with(&l, &EdOptions::default()).map_err(err)?;
        let b = steady_state_evolve_with(&l, seed, &EvolveOptions::default()).map_err(err)?;
        if !state_invariants(model, &a) || !state_invariants(model, &b) {
            bad.push(format!("invariants: {name}"));
        }
        let t = trace_distance(&a.state, &b.state).map_err(err)?;
        worst_t = worst_t.max(t);
        if t > 1e-7 {
            bad.push(format!("ED vs RK4: {name}"));
        }
    }
    let mut worst_res: f64 = 0.0;
    let mut solves = 0;
    for c in &ctx.curves {
        for (pt, d) in c.points.iter().zip(&c.diagnostics) {
            solves += 1;
            let bound = if d.method == Some(SolverKind::Rk4) { 1e-8 } else { 1e-9 };
            match d.residual {
                Some(r) if r <= bound && d.error.is_none() => worst_res = worst_res.max(r),
                _ => bad.push(format!("{} at {}: {:?} {:?}", c.model_id, pt.p, d.residual, d.error)),
            }
        }
    }
    Ok((
        bad.is_empty(),
        format!(
            "max ED-RK4 trace distance {worst_t:.1e}; {solves} sweep points, max residual {worst_res:.1e}; problems: {:?}",
            bad.iter().take(5).collect::<Vec<_>>()
        ),
    ))
}

fn main() -> ExitCode {
    let mut ctx = Context::default();
    let mut reports = Vec::new();
    let mut run = |id: u32, name: &str, f: &mut dyn FnMut(&mut Context) -> Outcome| {
        let start = Instant::now();
        let (pass, detail) = match f(&mut ctx) {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        let known = if !pass && KNOWN_FAILURES.contains(&id) {
            " (known)"
        } else {
            ""
        };
        println!(
            "criterion {id:>2} {}{known} [{secs:.1}s] {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        reports.push(Report { id, pass, detail });
    };
    run(1, "closed-form critical point", &mut |_| c1());
    run(2, "mean-field bifurcation", &mut |_| c2());
    run(3, "stability map", &mut |_| c3());
    run(4, "delta_p convergence", &mut c4);
    run(5, "valley and peak structure", &mut c5);
    run(6, "finite-size extrapolation", &mut c6);
    run(7, "Kerr semiclassics", &mut |_| c7());
    run(8, "Kerr quantum criticality", &mut c8);
    run(9, "fit machinery", &mut |_| c9());
    run(10, "metric axioms", &mut |c| c10(c));
    run(11, "solver invariants", &mut |c| c11(c));

    let passed = reports.iter().filter(|r| r.pass).count();
    println!("acceptance: {passed}/{} criteria pass", reports.len());
    let unexpected: Vec<&Report> = reports
        .iter()
        .filter(|r| !r.pass && !KNOWN_FAILURES.contains(&r.id))
        .collect();
    for r in &unexpected {
        eprintln!("unexpected failure of criterion {}: {}", r.id, r.detail);
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
