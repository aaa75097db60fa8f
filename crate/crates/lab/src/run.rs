//! Single-run orchestration: generate, evolve, post-process, emit.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use nrdf_core::{
    evolve, fit_decay_rate, hyperbolic_background, identity_residual, nrf_residual, pullback,
    renormalized_volume, rigidity_probe, Grid64, TimeSeries64,
};

use crate::config::{ConfigError, EchoValue, ScenarioConfig};
use crate::manifest::{grid_hash, write_csv, Manifest, Value};
use crate::scenario::{generate_scenario, Scenario};

/// Everything computed by a run before anything touches the disk.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ScenarioConfig,
    pub grid: Grid64,
    pub scenario: Scenario,
    pub series: TimeSeries64,
    /// Deterministic manifest entries: config echo and summary statistics.
    pub summary: Manifest,
}

impl Experiment {
    pub fn halted(&self) -> bool {
        self.series.termination.is_halted()
    }
}

/// Generates the scenario, evolves it and computes the summary.
pub fn execute(config: &ScenarioConfig) -> Result<Experiment, ConfigError> {
    let grid = config
        .grid()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let scenario = generate_scenario(config, &grid)?;
    let h = hyperbolic_background(&grid);
    let series = match evolve(&scenario.metric, &config.run_config(), &h, &grid) {
        Ok(s) => s,
        Err(halted) => *halted.series,
    };
    let summary = summarize(config, &grid, &scenario, &series);
    Ok(Experiment {
        config: config.clone(),
        grid,
        scenario,
        series,
        summary,
    })
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, Value::Float)
}

fn summarize(
    cfg: &ScenarioConfig,
    grid: &Grid64,
    scenario: &Scenario,
    series: &TimeSeries64,
) -> Manifest {
    let mut m = Manifest::new();
    for (key, value) in cfg.echo() {
        let value = match value {
            EchoValue::Float(x) => Value::Float(x),
            EchoValue::Int(x) => Value::Int(x),
            EchoValue::Bool(x) => Value::Bool(x),
            EchoValue::Text(s) => Value::Text(s),
        };
        m.set(format!("config.{key}"), value);
    }
    m.set(
        "code_version",
        Value::Text(env!("CARGO_PKG_VERSION").into()),
    );
    m.set("grid_hash", Value::Text(grid_hash(grid)));
    m.set(
        "termination",
        Value::Text(series.termination.label().into()),
    );
    m.set(
        "halt_reason",
        match &series.termination {
            nrdf_core::Termination::Halted(e) => Value::Text(e.to_string()),
            _ => Value::Null,
        },
    );
    m.set("records", Value::Int(series.records.len() as u64));
    m.set(
        "initial_within_epsilon",
        Value::Bool(series.initial_within_epsilon),
    );

    let r = &scenario.report;
    m.float("scenario_weighted_c0", r.weighted_c0);
    m.float("scenario_weighted_c1", r.weighted_c1);
    m.float("initial_curvature_floor", r.initial_floor);
    m.set("floor_ok", Value::Bool(r.floor_ok));

    let (first, last) = (series.records.first(), series.records.last());
    type Column = (&'static str, fn(&nrdf_core::Record64) -> f64);
    let fields: [Column; 11] = [
        ("t", |r| r.t),
        ("sup_u", |r| r.sup_u),
        ("l2_u", |r| r.l2_u),
        ("weighted_sup_u", |r| r.weighted_sup_u),
        ("sup_V", |r| r.sup_v),
        ("weighted_sup_V", |r| r.weighted_sup_v),
        ("renvol", |r| r.renvol),
        ("defect_integral", |r| r.defect_integral),
        ("boundary_flux", |r| r.boundary_flux),
        ("curvature_floor", |r| r.curvature_floor),
        ("dt", |r| r.dt),
    ];
    for (name, f) in fields {
        m.set(format!("initial_{name}"), opt(first.map(f)));
        m.set(format!("final_{name}"), opt(last.map(f)));
    }
    let min_floor = series
        .records
        .iter()
        .map(|r| r.curvature_floor)
        .fold(f64::INFINITY, f64::min);
    m.set("min_curvature_floor", opt(first.map(|_| min_floor)));
    let ratio = first.filter(|f| f.weighted_sup_u > 0.0).map(|f| {
        series
            .records
            .iter()
            .map(|r| r.weighted_sup_u / f.weighted_sup_u)
            .fold(0.0, f64::max)
    });
    m.set("max_weighted_sup_u_ratio", opt(ratio));
    let h = hyperbolic_background(grid);
    let tail = renormalized_volume(&series.final_state.metric, &h, grid).ok();
    m.set("final_renvol_tail_bound", opt(tail.map(|t| t.tail_bound)));

    let col = |f: fn(&nrdf_core::Record64) -> f64| series.records.iter().map(f).collect::<Vec<_>>();
    let identity = identity_residual(
        &col(|r| r.t),
        &col(|r| r.renvol),
        &col(|r| r.defect_integral),
        &col(|r| r.boundary_flux),
    );
    m.set(
        "max_monotonicity_residual",
        opt(identity.ok().map(|x| x.max)),
    );

    match fit_decay_rate(&series.column(|r| r.sup_u), None, grid.dim()) {
        Ok(d) => {
            m.float("decay_kappa_hat", d.kappa_hat);
            m.float("decay_fit_quality", d.fit_quality);
            m.float("decay_window_start", d.window.0);
            m.float("decay_window_end", d.window.1);
            m.set("decay_samples", Value::Int(d.samples as u64));
            m.float("decay_lambda_reference", d.lambda_reference);
            m.float("decay_ratio_to_reference", d.ratio_to_reference());
            m.set("decay_error", Value::Null);
        }
        Err(e) => {
            for key in [
                "decay_kappa_hat",
                "decay_fit_quality",
                "decay_window_start",
                "decay_window_end",
                "decay_samples",
                "decay_lambda_reference",
                "decay_ratio_to_reference",
            ] {
                m.set(key, Value::Null);
            }
            m.set("decay_error", Value::Text(e.to_string()));
        }
    }

    let pulled: Option<Vec<_>> = series
        .snapshots
        .iter()
        .map(|s| pullback(&s.metric, &s.map, grid).ok().map(|g| (s.t, g)))
        .collect();
    let nrf = pulled.and_then(|p| nrf_residual(&p, grid).ok());
    m.set("max_nrf_residual", opt(nrf.map(|x| x.max)));
    m.float("max_drift", series.max_drift);
    m.float("drift_integral", series.drift_integral);

    if cfg.rigidity {
        match rigidity_probe(series, grid, &cfg.rigidity_tolerances()) {
            Ok(v) => {
                m.set(
                    "rigidity_verdict",
                    Value::Text(if v.verdict { "PASS" } else { "FAIL" }.into()),
                );
                m.set("rigidity_renvol_zero", Value::Bool(v.renvol_zero));
                m.set("rigidity_defect_zero", Value::Bool(v.defect_zero));
                m.set("rigidity_pullback_match", Value::Bool(v.pullback_match));
                m.float("rigidity_max_renvol", v.max_renvol);
                m.float("rigidity_max_defect", v.max_defect);
                m.float("rigidity_pullback_error", v.pullback_error);
            }
            Err(e) => m.set("rigidity_verdict", Value::Text(format!("unavailable: {e}"))),
        }
    }
    m
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub experiment: Experiment,
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Directory a run writes into: `<out_root or output_dir or runs>/<name>`.
pub fn run_dir(config: &ScenarioConfig, out_root: Option<&Path>) -> PathBuf {
    let root = out_root
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    root.join(&config.name)
}

/// Runs one config and writes `timeseries.csv` and `manifest.json`. A halted
/// run still writes both; check [`Experiment::halted`].
pub fn run_experiment(
    config: &ScenarioConfig,
    out_root: Option<&Path>,
) -> anyhow::Result<RunOutcome> {
    let dir = run_dir(config, out_root);
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let start = SystemTime::now();
    let clock = Instant::now();
    let experiment = execute(config)?;
    let wall = clock.elapsed().as_secs_f64();
    let end = SystemTime::now();

    let mut manifest = Manifest::new();
    for (key, value) in experiment.summary.entries() {
        manifest.set(key.clone(), value.clone());
        if key == "grid_hash" {
            manifest.float("start_wall_clock", unix_seconds(start));
            manifest.float("end_wall_clock", unix_seconds(end));
            manifest.float("wall_seconds", wall);
        }
    }
    let csv_path = dir.join("timeseries.csv");
    let file = std::fs::File::create(&csv_path)
        .with_context(|| format!("cannot create {}", csv_path.display()))?;
    write_csv(&experiment.series.records, std::io::BufWriter::new(file))
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    let manifest_path = dir.join("manifest.json");
    manifest
        .write(&manifest_path)
        .with_context(|| format!("cannot write {}", manifest_path.display()))?;
    Ok(RunOutcome {
        dir,
        manifest,
        experiment,
    })
}
