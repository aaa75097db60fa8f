//! Acceptance criteria 1-9 at desk scale: n = 4, grid [0.25, 12], 800 points
//! unless a refinement study says otherwise. Prints one PASS/FAIL line per
//! criterion; the process fails if any criterion outside `EXPECTED_FAILURES`
//! fails, or if an expected failure starts passing.

use std::sync::OnceLock;

use nrdf_core::oracle::{curvature_oracle, relative_error};
use nrdf_core::{
    curvature, fit_decay_rate, identity_residual, nrf_residual, pullback, rigidity_probe, Grid64,
    RadialMetric64, RigidityTolerances, TimeSeries64,
};
use nrdf_lab::{
    execute, generate_scenario, run_experiment, Experiment, Profile, ScenarioConfig, ScenarioKind,
    WALL_CLOCK_KEYS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail for documented reasons (see README).
const EXPECTED_FAILURES: &[u32] = &[5];

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
}

fn outcome(id: u32, pass: bool, detail: String) -> Outcome {
    Outcome { id, pass, detail }
}

fn run(cfg: &ScenarioConfig) -> Experiment {
    execute(cfg).unwrap_or_else(|e| panic!("{}: {e}", cfg.name))
}

/// The criterion-3 run; it continues to `sup |u| < 1e-10` so that the slower
/// weighted gauge norm has time to settle.
fn stability_config() -> ScenarioConfig {
    ScenarioConfig {
        name: "stability".into(),
        kind: ScenarioKind::Conformal,
        amplitude: 1e-3,
        tau: 4.0,
        t_final: 10.0,
        stop_tol: 1e-10,
        ..ScenarioConfig::default()
    }
}

fn stability_run() -> &'static Experiment {
    static RUN: OnceLock<Experiment> = OnceLock::new();
    RUN.get_or_init(|| run(&stability_config()))
}

fn records_of(series: &TimeSeries64, f: fn(&nrdf_core::Record64) -> f64) -> Vec<f64> {
    series.records.iter().map(f).collect()
}

/// Value of `per_time` at each coarse time, looked up in a finer series.
fn on_times(coarse: &[f64], fine_times: &[f64], fine_values: &[f64]) -> Vec<f64> {
    coarse
        .iter()
        .filter_map(|&t| {
            fine_times
                .iter()
                .position(|&s| (s - t).abs() < 1e-9)
                .map(|k| fine_values[k])
        })
        .collect()
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let cfg = ScenarioConfig {
        name: "fixed-point".into(),
        kind: ScenarioKind::Background,
        t_final: 5.0,
        stop_tol: 0.0,
        ..ScenarioConfig::default()
    };
    let e = run(&cfg);
    let worst = max(&records_of(&e.series, |r| r.sup_u));
    let t_end = e.series.last().map_or(0.0, |r| r.t);
    let pass = worst <= 1e-6 && (t_end - 5.0).abs() < 1e-9 && !e.halted();
    outcome(
        1,
        pass,
        format!("max sup|u| = {worst:.3e} over [0, {t_end}] (<= 1e-6)"),
    )
}

/// Closed-form metrics as `(ln A, ln B)` closures.
type Closed = (
    Box<dyn Fn(f64) -> f64 + Sync>,
    Box<dyn Fn(f64) -> f64 + Sync>,
);

fn oracle_metrics() -> Vec<(String, Closed)> {
    let mut out: Vec<(String, Closed)> = vec![
        (
            "h".into(),
            (Box::new(|_| 0.0), Box::new(|r: f64| 2.0 * r.sinh().ln())),
        ),
        (
            "flat".into(),
            (Box::new(|_| 0.0), Box::new(|r: f64| 2.0 * r.ln())),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..5 {
        let mut bumps = || -> Vec<(f64, f64, f64)> {
            (0..3)
                .map(|_| {
                    (
                        rng.gen_range(-0.05..0.05),
                        rng.gen_range(1.5..9.0),
                        rng.gen_range(0.5..1.2),
                    )
                })
                .collect()
        };
        let (pa, pb) = (bumps(), bumps());
        let sum = |b: Vec<(f64, f64, f64)>| {
            move |r: f64| -> f64 {
                b.iter()
                    .map(|&(c, mu, s)| c * (-((r - mu) / s).powi(2)).exp())
                    .sum()
            }
        };
        let (fa, fb) = (sum(pa), sum(pb));
        out.push((
            format!("random-{k}"),
            (
                Box::new(fa),
                Box::new(move |r: f64| 2.0 * r.sinh().ln() + fb(r)),
            ),
        ));
    }
    out
}

fn oracle_error(closed: &Closed, points: usize) -> f64 {
    let grid = Grid64::with_defaults(4, points).unwrap();
    let la = grid.rho().iter().map(|&r| (closed.0)(r)).collect();
    let lb = grid
        .rho()
        .iter()
        .map(|&r| (closed.1)(r) - 2.0 * r.sinh().ln())
        .collect();
    let c = curvature(&RadialMetric64::from_logs(la, lb), &grid).unwrap();
    let a = |r: f64| (closed.0)(r).exp();
    let b = |r: f64| (closed.1)(r).exp();
    let mut worst = 0.0f64;
    for (i, &r) in grid.rho().iter().enumerate() {
        let o = curvature_oracle(4, &a, &b, r);
        for (x, y) in [
            (c.ric_rr[i], o.ric_rr),
            (c.ric_tt[i], o.ric_tt),
            (c.scalar[i], o.scalar),
            (c.connection.gamma_rrr[i], o.gamma_rrr),
            (c.connection.gamma_rtt[i], o.gamma_rtt),
            (c.connection.gamma_trt[i], o.gamma_trt),
        ] {
            worst = worst.max(relative_error(x, y));
        }
    }
    worst
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut worst_fine = 0.0f64;
    let mut worst_order = f64::INFINITY;
    for (name, closed) in oracle_metrics() {
        let fine = oracle_error(&closed, 1600);
        worst_fine = worst_fine.max(fine);
        pass &= fine <= 1e-6;
        // h is exact in the symbolic form; its error is the oracle's own floor.
        if name != "h" {
            // From 800 points on the error sits on the oracle floor (~2e-8),
            // so the order is read off the coarsest halving.
            let order = (oracle_error(&closed, 200) / oracle_error(&closed, 400)).log2();
            worst_order = worst_order.min(order);
            pass &= order >= 3.0;
        }
    }
    outcome(
        2,
        pass,
        format!("max relative error at 1600 points = {worst_fine:.3e} (<= 1e-6); min observed order 200 -> 400 points = {worst_order:.2} (>= 3)"),
    )
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn criterion_3() -> Outcome {
    let e = stability_run();
    let s = &e.series;
    let t_end = s.last().unwrap().t;
    let half: Vec<_> = s.records.iter().filter(|r| r.t >= t_end / 2.0).collect();
    let dec_sup = strictly_decreasing(&half.iter().map(|r| r.sup_u).collect::<Vec<_>>());
    let dec_l2 = strictly_decreasing(&half.iter().map(|r| r.l2_u).collect::<Vec<_>>());
    let fit = fit_decay_rate(&s.column(|r| r.sup_u), None, 4).unwrap();
    let final_sup = s.last().unwrap().sup_u;
    let pass = dec_sup
        && dec_l2
        && fit.kappa_hat > 0.5
        && fit.fit_quality >= 0.99
        && final_sup <= 1e-5
        && t_end <= 10.0;
    outcome(
        3,
        pass,
        format!(
            "decreasing over last half: sup {dec_sup}, L2 {dec_l2}; kappa_hat = {:.3} (> 0.5), fit_quality = {:.5} (>= 0.99); final sup|u| = {final_sup:.2e} at t = {t_end:.2}",
            fit.kappa_hat, fit.fit_quality
        ),
    )
}

/// Generated scenarios screened for criterion 4.
fn monotonicity_candidates() -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for kind in [
        ScenarioKind::Conformal,
        ScenarioKind::Shear,
        ScenarioKind::Gauge,
    ] {
        for profile in [Profile::Bump, Profile::Edge] {
            for amplitude in [1e-3, -1e-3, 1e-2] {
                if kind == ScenarioKind::Gauge && amplitude < 0.0 && profile == Profile::Edge {
                    continue;
                }
                out.push(ScenarioConfig {
                    name: format!("{}-{}-{amplitude:e}", kind.as_str(), profile.as_str()),
                    kind,
                    profile,
                    amplitude,
                    t_final: 0.5,
                    stop_tol: 0.0,
                    ..ScenarioConfig::default()
                });
            }
        }
    }
    out
}

fn criterion_4() -> Outcome {
    let mut accepted = Vec::new();
    let mut screened = 0;
    for cfg in monotonicity_candidates() {
        let grid = cfg.grid().unwrap();
        let Ok(s) = generate_scenario(&cfg, &grid) else {
            continue;
        };
        screened += 1;
        if s.report.initial_floor >= -cfg.tol_floor {
            accepted.push(cfg);
        }
    }
    let mut pass = !accepted.is_empty();
    let mut lines = Vec::new();
    for cfg in &accepted {
        let coarse = run(cfg);
        let fine = run(&ScenarioConfig {
            num_points: 2 * cfg.num_points - 1,
            record_interval: cfg.record_interval / 2.0,
            ..cfg.clone()
        });
        let v = records_of(&coarse.series, |r| r.renvol);
        let tol = 1e-6 * (1.0 + v[0].abs());
        let rise = v
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        let fine_v = records_of(&fine.series, |r| r.renvol);
        let fine_rise = fine_v
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        let residual = |s: &TimeSeries64| {
            identity_residual(
                &records_of(s, |r| r.t),
                &records_of(s, |r| r.renvol),
                &records_of(s, |r| r.defect_integral),
                &records_of(s, |r| r.boundary_flux),
            )
            .unwrap()
        };
        let (rc, rf) = (residual(&coarse.series), residual(&fine.series));
        let fine_on_coarse = max(&on_times(&rc.times, &rf.times, &rf.per_time));
        let ratio = rc.max / fine_on_coarse;
        let ok = rise <= tol && fine_rise <= tol && ratio >= 3.0;
        pass &= ok;
        lines.push(format!(
            "{} [V(0) = {:.3e}, max rise {rise:.1e} / fine {fine_rise:.1e} vs tol {tol:.1e}, residual {:.3e} -> {fine_on_coarse:.3e} = {ratio:.2}x, fine-run max {:.3e}]",
            cfg.name, v[0], rc.max, rf.max
        ));
    }
    outcome(
        4,
        pass,
        format!(
            "{} of {screened} generated scenarios have floor >= 0: {}",
            accepted.len(),
            lines.join("; ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let s = &stability_run().series;
    let Some(hit) = s.records.iter().find(|r| r.sup_u <= 1e-5) else {
        return outcome(5, false, "sup|u| never reached 1e-5".into());
    };
    let rate = |col: fn(&nrdf_core::Record64) -> f64| {
        fit_decay_rate(&s.column(col), None, 4).map_or(f64::NAN, |d| d.kappa_hat)
    };
    let (k_sup, k_vol) = (rate(|r| r.sup_u), rate(|r| r.renvol.abs()));
    let below = s
        .records
        .iter()
        .find(|r| r.renvol.abs() <= 1e-4)
        .map_or(f64::NAN, |r| r.t);
    outcome(
        5,
        hit.renvol.abs() <= 1e-4,
        format!(
            "at t = {:.2} (first sup|u| <= 1e-5): |V| = {:.3e} (<= 1e-4). V decays at {k_vol:.2} vs sup|u| at {k_sup:.2}; |V| <= 1e-4 first at t = {below:.2}",
            hit.t,
            hit.renvol.abs()
        ),
    )
}

fn criterion_6() -> Outcome {
    let coarse = stability_run();
    let fine = run(&ScenarioConfig {
        num_points: 1599,
        record_interval: 0.025,
        ..stability_config()
    });
    let residual = |e: &Experiment| {
        let pulled: Vec<_> = e
            .series
            .snapshots
            .iter()
            .map(|s| (s.t, pullback(&s.metric, &s.map, &e.grid).unwrap()))
            .collect();
        nrf_residual(&pulled, &e.grid).unwrap()
    };
    let (rc, rf) = (residual(coarse), residual(&fine));
    let fine_on_coarse = max(&on_times(&rc.times, &rf.times, &rf.per_time));
    let ratio = rc.max / fine_on_coarse;
    outcome(
        6,
        rc.max <= 1e-3 && ratio >= 3.0,
        format!(
            "max residual at 800 points = {:.3e} (<= 1e-3); at the same times with half spacing and interval = {fine_on_coarse:.3e}, {ratio:.2}x (>= 3)",
            rc.max
        ),
    )
}

fn criterion_7() -> Outcome {
    let tol = RigidityTolerances {
        renvol: 1e-6,
        defect: 1e-5,
        pullback: 1e-4,
    };
    let gauge = |amplitude: f64| {
        let e = run(&ScenarioConfig {
            name: "gauge".into(),
            kind: ScenarioKind::Gauge,
            amplitude,
            t_final: 4.0,
            stop_tol: 0.0,
            ..ScenarioConfig::default()
        });
        rigidity_probe(&e.series, &e.grid, &tol).unwrap()
    };
    let small = gauge(1e-5);
    let conformal = stability_run();
    let verdict = rigidity_probe(&conformal.series, &conformal.grid, &tol).unwrap();
    let renvol0 = conformal.series.records[0].renvol;
    let defect0 = conformal.series.records[0].defect_integral;
    let pass = small.verdict && !verdict.verdict && renvol0 > 0.0 && defect0 > 0.0;
    outcome(
        7,
        pass,
        format!(
            "gauge (amplitude 1e-5): verdict {} [renvol {:.2e}, defect {:.2e}, pullback {:.2e}]; conformal: verdict {} with renvol(0) = {renvol0:.3e}, defect integral(0) = {defect0:.3e}",
            if small.verdict { "PASS" } else { "FAIL" },
            small.max_renvol,
            small.max_defect,
            small.pullback_error,
            if verdict.verdict { "PASS" } else { "FAIL" },
        ),
    )
}

fn criterion_8() -> Outcome {
    let s = &stability_run().series;
    let w0 = s.records[0].weighted_sup_u;
    let worst = s
        .records
        .iter()
        .map(|r| r.weighted_sup_u / w0)
        .fold(0.0, f64::max);
    let last_v = s.last().unwrap().weighted_sup_v;
    let first_below = s
        .records
        .iter()
        .find(|r| r.weighted_sup_v < 1e-6)
        .map_or(f64::NAN, |r| r.t);
    outcome(
        8,
        worst <= 2.0 && last_v < 1e-6,
        format!("max weighted |u|(t) / weighted |u|(0) = {worst:.4} (<= 2); weighted |V| ends at {last_v:.3e}, below 1e-6 from t = {first_below:.2}"),
    )
}

fn strip_wall_clock(json: &str) -> String {
    json.lines()
        .filter(|l| {
            !WALL_CLOCK_KEYS
                .iter()
                .any(|k| l.trim_start().starts_with(&format!("\"{k}\"")))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn criterion_9() -> Outcome {
    let cfg = ScenarioConfig {
        name: "determinism".into(),
        kind: ScenarioKind::Shear,
        noise: 0.3,
        seed: 11,
        t_final: 0.5,
        rigidity: true,
        ..ScenarioConfig::default()
    };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let outs: Vec<_> = dirs
        .iter()
        .map(|d| run_experiment(&cfg, Some(d.path())).unwrap())
        .collect();
    let read = |o: &nrdf_lab::RunOutcome, f: &str| std::fs::read(o.dir.join(f)).unwrap();
    let csv_same = read(&outs[0], "timeseries.csv") == read(&outs[1], "timeseries.csv");
    let manifests: Vec<String> = outs
        .iter()
        .map(|o| strip_wall_clock(&String::from_utf8(read(o, "manifest.json")).unwrap()))
        .collect();
    let manifest_same = manifests[0] == manifests[1];
    let bytes = read(&outs[0], "timeseries.csv").len();
    outcome(
        9,
        csv_same && manifest_same,
        format!("timeseries.csv identical: {csv_same} ({bytes} bytes); manifest.json identical minus wall clock: {manifest_same}"),
    )
}

fn main() {
    let criteria: [fn() -> Outcome; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let mut results: Vec<Outcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = criteria.iter().map(|c| scope.spawn(c)).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion panicked"))
            .collect()
    });
    results.sort_by_key(|o| o.id);
    let mut unexpected = 0;
    for o in &results {
        let expected_fail = EXPECTED_FAILURES.contains(&o.id);
        let note = match (o.pass, expected_fail) {
            (false, true) => " (expected failure)",
            (true, true) => " (expected to fail; now passes)",
            _ => "",
        };
        println!(
            "criterion {} {}{note}: {}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if o.pass == expected_fail {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria deviated from the expected outcome");
        std::process::exit(1);
    }
}
