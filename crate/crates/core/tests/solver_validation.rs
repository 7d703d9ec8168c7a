//! Cross-checks between the two solvers and against refinement oracles.

use henle_core::characteristics::{picard_solve, PicardConfig};
use henle_core::diagnostics::{comparison_residual, cross_validate, l1_dist};
use henle_core::grid::{run_full, run_reduced, step_reduced, Grid1D};
use henle_core::layers::{build_limit_initial, LimitInit};
use henle_core::model::Params;
use henle_core::presets;
use henle_core::{ProblemData, Profile};

/// L1 distance between a coarse field and a 2x refined one, as piecewise
/// constant functions on the union mesh.
fn l1_dist_nested(coarse: &[f64], fine: &[f64], dx_fine: f64) -> f64 {
    assert_eq!(fine.len(), 2 * coarse.len());
    let mut acc = 0.0;
    for (i, c) in coarse.iter().enumerate() {
        acc += (c - fine[2 * i]).abs() + (c - fine[2 * i + 1]).abs();
    }
    acc * dx_fine
}

#[test]
fn cross_validate_constant_data_is_exact() {
    let p = Params { vm: 0.0, ..Params::default() };
    let g = Grid1D::new(&p, 100).unwrap();
    let d = presets::constant(1.0, 1.0, 1.0);
    let cfg = PicardConfig::for_params(&p, &g).unwrap();
    let dist = cross_validate(&p, &d, &g, &cfg).unwrap();
    assert!(dist < 1e-11, "constant data: solvers agree to rounding, got {dist}");
}

#[test]
fn cross_solver_distance_halves_under_refinement() {
    let p = Params::default();
    let d = presets::bump(1.0, 1.0);
    let dist_at = |n: usize| {
        let g = Grid1D::new(&p, n).unwrap();
        let cfg = PicardConfig::for_params(&p, &g).unwrap();
        cross_validate(&p, &d, &g, &cfg).unwrap()
    };
    let coarse = dist_at(100);
    let fine = dist_at(200);
    let ratio = coarse / fine;
    assert!(
        (1.6..=2.4).contains(&ratio),
        "first-order agreement: expected ~2, got {ratio} ({coarse} -> {fine})"
    );
}

#[test]
fn cross_solver_agreement_survives_stiff_relaxation() {
    // eps = 1e-3 forces one-step windows; the mild solver needs a lattice
    // fine enough that dt stays inside the contraction bound
    let p = Params { eps: 1e-3, t_final: 0.02, ..Params::default() };
    let d = presets::bump(1.0, p.t_final);
    let g = Grid1D::new(&p, 8192).unwrap();
    let cfg = PicardConfig::for_params(&p, &g).unwrap();
    let dist = cross_validate(&p, &d, &g, &cfg).unwrap();
    // space-time L1 over a 0.02 horizon; the grid constant observed on the
    // smooth presets is O(1), so 1 dx of slack is generous
    assert!(
        dist <= 1.0 * g.dx,
        "stiff cross-solver distance {dist} exceeds dx = {}",
        g.dx
    );
}

#[test]
fn grid_self_convergence_is_first_order() {
    let p = Params::default();
    let d = presets::bump(1.0, 1.0);
    let final_u1 = |n: usize| {
        let g = Grid1D::new(&p, n).unwrap();
        let traj = run_full(&p, &d, &g, g.steps.max(1)).unwrap();
        (traj.snaps.last().unwrap().u1.clone(), g.dx)
    };
    let (u100, _) = final_u1(100);
    let (u200, dx200) = final_u1(200);
    let (u400, dx400) = final_u1(400);
    let d1 = l1_dist_nested(&u100, &u200, dx200);
    let d2 = l1_dist_nested(&u200, &u400, dx400);
    let ratio = d2 / d1;
    assert!(
        (0.4..=0.6).contains(&ratio),
        "successive-refinement distance should halve, got {ratio} ({d1} -> {d2})"
    );
}

#[test]
fn reduced_step_matches_fine_reference_to_second_order() {
    // one generic reduced step versus the same scheme at a 63x finer lattice
    // (odd factor so coarse cell centers are fine cell centers); the fine
    // reference integrates the same 2dt span in 63 exact-transport steps, so
    // the measured defect is the local source-splitting error, O(dt^2).
    // Data must be resolved on the coarse grid for the order to show.
    let p = Params::default();
    let pi = std::f64::consts::PI;
    let d = ProblemData::new(
        Profile::analytic(move |x| 1.0 + 0.3 * (pi * x).sin().powi(2)),
        Profile::analytic(move |x| 1.0 + 0.2 * (pi * x).cos().powi(2)),
        Profile::analytic(move |x| 1.0 + 0.3 * (pi * x).sin().powi(2)),
        Profile::analytic(move |x| 1.0 + 0.2 * (pi * x).cos().powi(2)),
        Profile::Constant(1.1),
        Profile::Constant(1.0),
        1.0,
        1.0,
    )
    .unwrap();
    let refine = 63usize;
    let one_step_error = |n: usize| {
        let g = Grid1D::new(&p, n).unwrap();
        let s0 = build_limit_initial(&d, &g, LimitInit::Average);
        let coarse = step_reduced(&s0, &g, &p, d.ub_at(0.0)).unwrap();

        let nf = n * refine;
        let gf = Grid1D::new(&p, nf).unwrap();
        let mut fine = build_limit_initial(&d, &gf, LimitInit::Average);
        for k in 0..refine {
            let t = 2.0 * k as f64 * gf.dt;
            fine = step_reduced(&fine, &gf, &p, d.ub_at(t)).unwrap();
        }
        // compare u1 and u0 at coincident centers
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let j = refine * i + (refine - 1) / 2;
            worst = worst.max((coarse.u1[i] - fine.u1[j]).abs());
            worst = worst.max((coarse.u0[i] - fine.u0[j]).abs());
        }
        (worst, g.dt)
    };
    let (e8, dt8) = one_step_error(8);
    let (e16, _) = one_step_error(16);
    let ratio = e8 / e16;
    assert!(
        (2.5..=6.5).contains(&ratio),
        "local error should drop ~4x under dt halving, got {ratio} ({e8} -> {e16})"
    );
    // absolute sanity: C = e / dt^2 stays O(1) for this data
    assert!(e8 <= 5.0 * dt8 * dt8, "e8 = {e8}, dt8^2 = {}", dt8 * dt8);
}

#[test]
fn averaged_limit_initialization_minimizes_the_limit_distance() {
    // ill-prepared data distinguishes the two readings of the limit trace;
    // the averaged one tracks the relaxed solution
    let d = presets::step(1.0, 1.0);
    for eps in [1e-1, 1e-2, 1e-3] {
        let p = Params { eps, ..Params::default() };
        let g = Grid1D::new(&p, 200).unwrap();
        let full = run_full(&p, &d, &g, g.steps).unwrap();
        let u1_full = &full.snaps.last().unwrap().u1;

        let dist_for = |mode: LimitInit| {
            let init = build_limit_initial(&d, &g, mode);
            let red = run_reduced(&p, &d, &g, g.steps_reduced().max(1), init).unwrap();
            l1_dist(u1_full, &red.snaps.last().unwrap().u1, g.dx)
        };
        let avg = dist_for(LimitInit::Average);
        let sum = dist_for(LimitInit::LiteralSum);
        assert!(
            avg < sum,
            "eps = {eps}: averaged reading should win ({avg} vs {sum})"
        );
    }
}

#[test]
fn picard_matches_grid_on_the_default_problem() {
    let p = Params::default();
    let d = presets::bump(1.0, 1.0);
    let g = Grid1D::new(&p, 400).unwrap();
    let cfg = PicardConfig::for_params(&p, &g).unwrap();
    let grid_traj = run_full(&p, &d, &g, 1).unwrap();
    let mild_traj = picard_solve(&p, &d, &g, &cfg, 1).unwrap();
    let last_g = grid_traj.snaps.last().unwrap();
    let last_m = mild_traj.snaps.last().unwrap();
    assert!((last_g.t - last_m.t).abs() < 1e-12);
    let dist: f64 = last_g
        .fields()
        .iter()
        .zip(last_m.fields())
        .map(|(a, b)| l1_dist(a, b, g.dx))
        .sum();
    assert!(dist <= 2.0 * g.dx, "final-time distance {dist} vs dx {}", g.dx);
}

#[test]
fn comparison_principle_for_perturbed_data() {
    let p = Params::default();
    let g = Grid1D::new(&p, 200).unwrap();
    let base = presets::bump(1.0, 1.0);

    // perturb the initial descending-lumen profile
    let mut shifted = base.clone();
    shifted.u1_0 = Profile::analytic(move |x| {
        1.0 + (-100.0f64 * (x - 0.4).powi(2)).exp() + 0.05 * (3.0 * x).sin().powi(2)
    });
    let shifted = ProblemData::new(
        shifted.u1_0,
        shifted.u2_0,
        shifted.q1_0,
        shifted.q2_0,
        shifted.u0_0,
        shifted.ub,
        1.0,
        1.0,
    )
    .unwrap();
    let run_a = run_full(&p, &base, &g, 1).unwrap();
    let run_b = run_full(&p, &shifted, &g, 1).unwrap();
    let slack = comparison_residual(&run_a, &run_b, &base, &shifted, &p).unwrap();
    assert!(slack >= -5.0 * g.dx, "initial-data comparison slack {slack}");

    // perturb only the boundary trace
    let mut bumped = base.clone();
    bumped.ub = Profile::analytic(|t: f64| {
        1.0 + (-16.0f64).exp() + 0.1 * (2.0 * t).sin().powi(2)
    });
    let bumped = ProblemData::new(
        bumped.u1_0,
        bumped.u2_0,
        bumped.q1_0,
        bumped.q2_0,
        bumped.u0_0,
        bumped.ub,
        1.0,
        1.0,
    )
    .unwrap();
    let run_c = run_full(&p, &bumped, &g, 1).unwrap();
    let slack = comparison_residual(&run_a, &run_c, &base, &bumped, &p).unwrap();
    assert!(slack >= -5.0 * g.dx, "boundary comparison slack {slack}");
}
