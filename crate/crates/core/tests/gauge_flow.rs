//! Refinement studies for the stepper and the gauge machinery.

use nrdf_core::{
    curvature, deturck_vector, evolve, hyperbolic_background, nrdf_rhs_split, perturbation_norm_at,
    pullback, renormalized_volume, rigidity_probe, step, DiffeoMap64, FlowState64, Grid64,
    RadialMetric64, RigidityTolerances, RunConfig64, StepControl,
};

/// `C^7` bump supported in `(c - w, c + w)`.
fn compact_bump(r: f64, c: f64, w: f64) -> f64 {
    let x = (r - c) / w;
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - x * x).powi(8)
    }
}

const WARP_CENTER: f64 = 5.0;
const WARP_WIDTH: f64 = 1.5;

fn warp(grid: &Grid64, amplitude: f64) -> DiffeoMap64 {
    DiffeoMap64::from_fn(grid, |r| {
        r + amplitude * compact_bump(r, WARP_CENTER, WARP_WIDTH)
    })
    .unwrap()
}

/// A perturbation of `h` that agrees with it near both pinned ends.
fn generic_metric(grid: &Grid64) -> RadialMetric64 {
    let la = grid
        .rho()
        .iter()
        .map(|&r| 0.02 * compact_bump(r, 2.5, 1.8))
        .collect();
    let lb = grid
        .rho()
        .iter()
        .map(|&r| -0.03 * compact_bump(r, 3.5, 1.5))
        .collect();
    RadialMetric64::from_logs(la, lb)
}

fn max_mismatch(x: &RadialMetric64, y: &RadialMetric64, grid: &Grid64) -> f64 {
    (0..grid.len())
        .map(|i| perturbation_norm_at(x, y, grid, i))
        .fold(0.0, f64::max)
}

#[test]
fn inverse_round_trip_is_fourth_order() {
    let errors: Vec<f64> = [200, 400, 800]
        .iter()
        .map(|&n| {
            let grid = Grid64::with_defaults(4, n).unwrap();
            let g = generic_metric(&grid);
            let map = warp(&grid, 0.2);
            let inverse = map.invert(&grid).unwrap();
            let there = pullback(&g, &map, &grid).unwrap();
            let back = pullback(&there, &inverse, &grid).unwrap();
            max_mismatch(&back, &g, &grid)
        })
        .collect();
    assert!(errors[2] < 5e-5, "{errors:?}");
    assert!(
        errors[0] / errors[1] > 12.0 && errors[1] / errors[2] > 12.0,
        "{errors:?}"
    );
}

#[test]
fn inverse_composes_to_identity() {
    let grid = Grid64::with_defaults(4, 400).unwrap();
    let map = warp(&grid, 0.2);
    let inverse = map.invert(&grid).unwrap();
    for &r in grid.rho().iter().step_by(7) {
        assert!((map.at(&grid, inverse.at(&grid, r)) - r).abs() < 1e-9);
    }
}

#[test]
#[allow(clippy::needless_range_loop)]
fn scalar_curvature_is_invariant_under_pullback() {
    let grid = Grid64::with_defaults(4, 800).unwrap();
    let g = generic_metric(&grid);
    let map = warp(&grid, 0.2);
    let pulled = curvature(&pullback(&g, &map, &grid).unwrap(), &grid).unwrap();
    let original = curvature(&g, &grid).unwrap();
    let phi = map.phi(&grid);
    let h = grid.spacing();
    for i in 20..grid.len() - 20 {
        // Cubic interpolation of the original scalar curvature at phi_i.
        let x = (phi[i] - grid.rho_min()) / h;
        let k = (x.floor() as usize).clamp(1, grid.len() - 3);
        let s = x - k as f64;
        let f = &original.scalar;
        let value = f[k - 1] * (-s * (s - 1.0) * (s - 2.0) / 6.0)
            + f[k] * ((s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0)
            + f[k + 1] * (-(s + 1.0) * s * (s - 2.0) / 2.0)
            + f[k + 2] * ((s + 1.0) * s * (s - 1.0) / 6.0);
        assert!(
            (pulled.scalar[i] - value).abs() < 5e-5,
            "i={i}: {} vs {value}",
            pulled.scalar[i]
        );
    }
}

#[test]
fn pulled_back_hyperbolic_is_pure_gauge() {
    let grid = Grid64::with_defaults(4, 800).unwrap();
    let h = hyperbolic_background(&grid);
    let g = pullback(&h, &warp(&grid, 0.1), &grid).unwrap();
    let split = nrdf_rhs_split(&FlowState64::new(g.clone()), &h, &grid).unwrap();
    assert!(split.ricci.sup() < 1e-5, "{}", split.ricci.sup());
    assert!(split.gauge.sup() > 1e-3);
    let v = deturck_vector(&g, &h, &grid, 0.0).unwrap();
    for (i, &r) in grid.rho().iter().enumerate() {
        if (r - WARP_CENTER).abs() >= WARP_WIDTH {
            assert!(v.v_rho[i].abs() < 1e-8, "rho={r}: {}", v.v_rho[i]);
        }
    }
    assert!(v.sup_norm > 1e-3);
    // Volume is preserved exactly in the continuum; the quadrature error
    // scales with the background volume of the warped region.
    let support: f64 = (0..grid.len())
        .filter(|&i| (grid.rho()[i] - WARP_CENTER).abs() < WARP_WIDTH)
        .map(|i| 2.0 * std::f64::consts::PI.powi(2) * grid.sphere_density(i) * grid.spacing())
        .sum();
    let report = renormalized_volume(&g, &h, &grid).unwrap();
    assert!(
        report.renvol.abs() < 1e-6 * support,
        "{} of {support}",
        report.renvol
    );
    assert!(
        report.defect_integral.abs() < 1e-5 * support,
        "{}",
        report.defect_integral
    );
}

#[test]
fn step_local_error_is_fifth_order() {
    let grid = Grid64::with_defaults(4, 200).unwrap();
    let h = hyperbolic_background(&grid);
    let state = FlowState64::new(generic_metric(&grid));
    let bound = StepControl::new(1.0).stability_bound(&state.metric, &grid);
    let gap = |dt: f64| -> f64 {
        let one = step(&state, &StepControl::new(dt), &h, &grid).unwrap();
        let half = StepControl::new(dt / 2.0);
        let two = step(&step(&state, &half, &h, &grid).unwrap(), &half, &h, &grid).unwrap();
        one.metric
            .log_a()
            .iter()
            .zip(two.metric.log_a())
            .chain(one.metric.log_b().iter().zip(two.metric.log_b()))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let dts = [bound, bound / 2.0, bound / 4.0];
    let gaps: Vec<f64> = dts.iter().map(|&dt| gap(dt)).collect();
    // K dt^5 with K estimated from the finest pair.
    let order = (gaps[1] / gaps[2]).log2();
    assert!(order > 4.5, "{gaps:?} order {order}");
    assert!((gaps[0] / gaps[1]).log2() > 4.0, "{gaps:?}");
}

/// Pure-gauge run from `warp^* h`: `Phi_T^* g(T)` should return the initial
/// metric. Returns the mismatch away from the inner end, where the pinned
/// boundary is incompatible with a pure gauge motion, and the probe verdict.
fn pure_gauge_run(
    points: usize,
    map: impl Fn(&Grid64) -> DiffeoMap64,
    t_final: f64,
) -> (f64, nrdf_core::RigidityVerdict<f64>) {
    let grid = Grid64::with_defaults(4, points).unwrap();
    let h = hyperbolic_background(&grid);
    let initial = pullback(&h, &map(&grid), &grid).unwrap();
    let config = RunConfig64 {
        t_final,
        record_interval: 0.25,
        stop_tol: 0.0,
        ..RunConfig64::default()
    };
    let series = evolve(&initial, &config, &h, &grid).unwrap();
    let last = series.snapshots.last().unwrap();
    let pulled = pullback(&last.metric, &last.map, &grid).unwrap();
    let mismatch = (0..grid.len() - 20)
        .filter(|&i| grid.rho()[i] >= 2.0)
        .map(|i| perturbation_norm_at(&pulled, &initial, &grid, i))
        .fold(0.0, f64::max);
    (
        mismatch,
        rigidity_probe(&series, &grid, &RigidityTolerances::default()).unwrap(),
    )
}

#[test]
fn pure_gauge_flow_converges_under_refinement() {
    let (coarse, _) = pure_gauge_run(200, |g| warp(g, 0.1), 0.5);
    let (fine, verdict) = pure_gauge_run(400, |g| warp(g, 0.1), 0.5);
    assert!(coarse / fine > 4.0, "{coarse:.3e} -> {fine:.3e}");
    assert!(fine < 1e-4, "{fine:.3e}");
    assert!(verdict.pullback_error < 1e-2, "{verdict:?}");
}

/// The pinned ends leak a non-gauge disturbance proportional to the
/// displacement, so the absolute rigidity tolerances need a small warp.
#[test]
fn small_pure_gauge_passes_rigidity() {
    let small =
        |g: &Grid64| DiffeoMap64::from_fn(g, |r| r + 1e-5 * compact_bump(r, 3.0, 1.5)).unwrap();
    let (_, verdict) = pure_gauge_run(800, small, 4.0);
    assert!(verdict.verdict, "{verdict:?}");
    let large =
        |g: &Grid64| DiffeoMap64::from_fn(g, |r| r + 1e-3 * compact_bump(r, 3.0, 1.5)).unwrap();
    let (_, verdict) = pure_gauge_run(800, large, 4.0);
    assert!(!verdict.verdict && verdict.max_renvol < 1e-3, "{verdict:?}");
}
