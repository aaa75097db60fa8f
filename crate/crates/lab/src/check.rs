//! Built-in oracle and invariant suite behind `nrdf-lab check`.

use nrdf_core::oracle::{curvature_oracle, relative_error, simpson};
use nrdf_core::{
    curvature, evolve, fit_decay_rate, hyperbolic_background, pullback, renormalized_volume,
    rhs_discrepancy, DiffeoMap64, Grid64, RadialMetric64, RunConfig64,
};

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::run::execute;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Measured value against its bound.
    pub detail: String,
}

fn bounded(name: &'static str, value: f64, bound: f64) -> CheckResult {
    CheckResult {
        name,
        passed: value <= bound,
        detail: format!("{value:.3e} <= {bound:.1e}"),
    }
}

fn bump(r: f64) -> f64 {
    0.01 * (-((r - 2.0) / 0.7f64).powi(2)).exp()
}

/// Grid of 400 points with a conformal Gaussian bump.
fn bump_case() -> (Grid64, RadialMetric64) {
    let grid = Grid64::with_defaults(4, 400).expect("default grid");
    let f: Vec<f64> = grid.rho().iter().map(|&r| bump(r)).collect();
    (grid, RadialMetric64::conformal(&f))
}

fn curvature_oracle_check() -> CheckResult {
    let (grid, metric) = bump_case();
    let c = curvature(&metric, &grid).expect("valid metric");
    let a = |r: f64| (2.0 * bump(r)).exp();
    let b = |r: f64| (2.0 * bump(r)).exp() * r.sinh().powi(2);
    let worst = grid
        .rho()
        .iter()
        .enumerate()
        .step_by(5)
        .map(|(i, &r)| {
            let o = curvature_oracle(4, &a, &b, r);
            relative_error(c.scalar[i], o.scalar)
                .max(relative_error(c.ric_rr[i], o.ric_rr))
                .max(relative_error(c.ric_tt[i], o.ric_tt))
        })
        .fold(0.0, f64::max);
    bounded("curvature-oracle", worst, 1e-5)
}

fn background_stationary() -> CheckResult {
    let grid = Grid64::with_defaults(4, 200).expect("default grid");
    let h = hyperbolic_background(&grid);
    let config = RunConfig64 {
        t_final: 0.5,
        stop_tol: 0.0,
        keep_snapshots: false,
        ..RunConfig64::default()
    };
    let worst = match evolve(&h, &config, &h, &grid) {
        Ok(s) => s.records.iter().map(|r| r.sup_u).fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    };
    bounded("background-stationary", worst, 1e-10)
}

fn expanded_form() -> CheckResult {
    let (grid, metric) = bump_case();
    let d = rhs_discrepancy(&metric, &grid).expect("valid metric");
    bounded("expanded-form", d.max_log_a.max(d.max_log_b), 1e-4)
}

fn volume_quadrature() -> CheckResult {
    let (grid, metric) = bump_case();
    let h = hyperbolic_background(&grid);
    let report = renormalized_volume(&metric, &h, &grid).expect("decaying tail");
    let omega = 2.0 * std::f64::consts::PI.powi(2);
    let exact = omega
        * simpson(
            |r| (4.0 * bump(r)).exp_m1() * r.sinh().powi(3),
            grid.rho_min(),
            grid.rho_max(),
            8000,
        );
    bounded(
        "renvol-quadrature",
        (report.renvol / exact - 1.0).abs(),
        1e-4,
    )
}

fn pullback_round_trip() -> CheckResult {
    let (grid, metric) = bump_case();
    let map = DiffeoMap64::from_fn(&grid, |r| {
        let x = (r - 4.0) / 1.5;
        r + if x.abs() < 1.0 {
            0.1 * (1.0 - x * x).powi(8)
        } else {
            0.0
        }
    })
    .expect("monotone map");
    let there = pullback(&metric, &map, &grid).expect("valid map");
    let back = pullback(&there, &map.invert(&grid).expect("invertible"), &grid).expect("valid map");
    let worst = (0..grid.len())
        .map(|i| nrdf_core::perturbation_norm_at(&back, &metric, &grid, i))
        .fold(0.0, f64::max);
    bounded("pullback-round-trip", worst, 1e-4)
}

fn decay_fit() -> CheckResult {
    let series: Vec<(f64, f64)> = (0..40)
        .map(|k| (0.1 * k as f64, 3.0 * (-2.5 * 0.1 * k as f64).exp()))
        .collect();
    match fit_decay_rate(&series, None, 4) {
        Ok(d) => bounded(
            "decay-fit",
            (d.kappa_hat - 2.5).abs() + (1.0 - d.fit_quality),
            1e-9,
        ),
        Err(e) => CheckResult {
            name: "decay-fit",
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn config_round_trip() -> CheckResult {
    let cfg = ScenarioConfig {
        kind: ScenarioKind::Gauge,
        amplitude: 0.123456789,
        seed: 42,
        ..ScenarioConfig::default()
    };
    let passed = ScenarioConfig::parse(&cfg.to_string(), None).as_ref() == Ok(&cfg);
    CheckResult {
        name: "config-round-trip",
        passed,
        detail: if passed {
            "identical".into()
        } else {
            "mismatch".into()
        },
    }
}

/// Short conformal run, executed twice: identical records, and the volume
/// identity holds along them.
fn run_invariants() -> Vec<CheckResult> {
    let cfg = ScenarioConfig {
        num_points: 200,
        t_final: 0.3,
        record_interval: 0.02,
        ..ScenarioConfig::default()
    };
    let (a, b) = match (execute(&cfg), execute(&cfg)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            let detail = e.to_string();
            return vec![CheckResult {
                name: "short-run",
                passed: false,
                detail,
            }];
        }
    };
    let same = a
        .series
        .records
        .iter()
        .zip(&b.series.records)
        .all(|(x, y)| {
            nrdf_core::Record64 { elapsed: 0.0, ..*x } == nrdf_core::Record64 { elapsed: 0.0, ..*y }
        })
        && a.series.records.len() == b.series.records.len();
    let residual = a
        .summary
        .get("max_monotonicity_residual")
        .and_then(|v| v.as_f64())
        .unwrap_or(f64::INFINITY);
    vec![
        CheckResult {
            name: "determinism",
            passed: same,
            detail: format!("{} records compared", a.series.records.len()),
        },
        bounded("volume-identity", residual, 1e-3),
    ]
}

/// Runs every check in a fixed order.
pub fn run_checks() -> Vec<CheckResult> {
    let mut out = vec![
        curvature_oracle_check(),
        background_stationary(),
        expanded_form(),
        volume_quadrature(),
        pullback_round_trip(),
        decay_fit(),
        config_round_trip(),
    ];
    out.extend(run_invariants());
    out
}
