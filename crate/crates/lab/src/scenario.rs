//! Initial data families on top of the hyperbolic background.

use std::path::Path;

use nrdf_core::stencil::d1;
use nrdf_core::{curvature, hyperbolic_background, pullback, DiffeoMap64, Grid64, RadialMetric64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, Profile, ScenarioConfig, ScenarioKind};

/// Number of random sine modes modulating the profile when `noise > 0`.
const NOISE_MODES: usize = 4;

/// `ln(1 + e^{kx}) / k`, a smooth version of `max(x, 0)`.
pub fn softplus(x: f64, k: f64) -> f64 {
    let y = k * x;
    if y > 30.0 {
        x
    } else {
        y.exp().ln_1p() / k
    }
}

/// Measured properties of the generated initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioReport {
    /// `sup e^{tau rho_bar} |u|_h`.
    pub weighted_c0: f64,
    /// `sup e^{tau rho_bar} (|u|_h + |nabla~ u|_h)`.
    pub weighted_c1: f64,
    /// `min (R + n(n-1))` over the grid.
    pub initial_floor: f64,
    /// Whether the floor clears `-tol_floor`.
    pub floor_ok: bool,
    pub sup_u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub metric: RadialMetric64,
    /// The generating map for gauge scenarios.
    pub map: Option<DiffeoMap64>,
    pub report: ScenarioReport,
}

/// Radial profile `amplitude * w(rho) * e^{-tau rho_bar}` sampled on the grid.
pub fn profile(cfg: &ScenarioConfig, grid: &Grid64) -> Vec<f64> {
    let (lo, hi) = (grid.rho_min(), grid.rho_max());
    let ell = cfg.boundary_width;
    let noise = noise_modes(cfg);
    grid.rho()
        .iter()
        .map(|&r| {
            let right = -(-((hi - r) / ell).powi(2)).exp_m1();
            let w = match cfg.profile {
                Profile::Bump => {
                    let left = -(-((r - lo) / ell).powi(2)).exp_m1();
                    (-((r - cfg.bump_center) / cfg.bump_width).powi(2)).exp() * left * right
                }
                Profile::Edge => -(-cfg.edge_rate * (r - lo)).exp_m1() * right,
            };
            let s = (r - lo) / (hi - lo);
            let modulation: f64 = noise
                .iter()
                .enumerate()
                .map(|(k, &(c, phase))| {
                    c * ((k + 1) as f64 * std::f64::consts::PI * s + phase).sin()
                })
                .sum();
            let decay = (-cfg.tau * softplus(r - cfg.rho_d, cfg.weight_sharpness)).exp();
            cfg.amplitude * w * (1.0 + cfg.noise * modulation) * decay
        })
        .collect()
}

fn noise_modes(cfg: &ScenarioConfig) -> Vec<(f64, f64)> {
    if cfg.noise == 0.0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..NOISE_MODES)
        .map(|k| {
            let c = rng.gen_range(-1.0..1.0) / (k + 1) as f64;
            (c, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect()
}

/// Builds the initial metric described by `cfg` and measures it.
pub fn generate_scenario(cfg: &ScenarioConfig, grid: &Grid64) -> Result<Scenario, ConfigError> {
    cfg.validate()?;
    let h = hyperbolic_background(grid);
    let mut map = None;
    let metric = match cfg.kind {
        ScenarioKind::Background => h.clone(),
        ScenarioKind::Conformal => RadialMetric64::conformal(&profile(cfg, grid)),
        ScenarioKind::Shear => {
            let p = profile(cfg, grid);
            if let Some(i) = p.iter().position(|&x| !(1.0 + x > 0.0)) {
                return Err(ConfigError::Invalid(format!(
                    "amplitude = {} makes the metric non-positive at rho = {:.4}: need 1 + amplitude * w * decay > 0",
                    cfg.amplitude,
                    grid.rho()[i]
                )));
            }
            let logs: Vec<f64> = p.iter().map(|&x| x.ln_1p()).collect();
            RadialMetric64::from_logs(logs.clone(), logs)
        }
        ScenarioKind::Gauge => {
            let p = profile(cfg, grid);
            let phi = DiffeoMap64::from_shift(grid, p).map_err(|e| {
                ConfigError::Invalid(format!(
                    "amplitude = {} gives a non-monotone gauge map: need 1 + d/drho (amplitude * w * decay) > 0 ({e})",
                    cfg.amplitude
                ))
            })?;
            let g = pullback(&h, &phi, grid).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            map = Some(phi);
            g
        }
        ScenarioKind::CustomTable => {
            let path = cfg.table.as_deref().expect("validated");
            read_table(path, grid)?
        }
    };
    metric.validate(grid).map_err(|e| {
        ConfigError::Invalid(format!("generated metric is not positive definite: {e}"))
    })?;
    let report = measure(&metric, cfg, grid)?;
    Ok(Scenario {
        metric,
        map,
        report,
    })
}

fn measure(
    metric: &RadialMetric64,
    cfg: &ScenarioConfig,
    grid: &Grid64,
) -> Result<ScenarioReport, ConfigError> {
    let m = grid.sphere_dim() as f64;
    let ra: Vec<f64> = metric.log_a().iter().map(|x| x.exp_m1()).collect();
    let rb: Vec<f64> = metric.log_b().iter().map(|x| x.exp_m1()).collect();
    let (dra, drb) = (d1(&ra, grid.spacing()), d1(&rb, grid.spacing()));
    let (mut c0, mut c1, mut sup) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..grid.len() {
        let w = grid.weight(i, cfg.tau);
        let u = (ra[i] * ra[i] + m * rb[i] * rb[i]).sqrt();
        let mixed = (ra[i] - rb[i]) * grid.coth()[i];
        let du = (dra[i] * dra[i] + m * drb[i] * drb[i] + 2.0 * m * mixed * mixed).sqrt();
        sup = sup.max(u);
        c0 = c0.max(w * u);
        c1 = c1.max(w * (u + du));
    }
    let curv = curvature(metric, grid).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let floor = curv
        .scalar_defect
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(ScenarioReport {
        weighted_c0: c0,
        weighted_c1: c1,
        initial_floor: floor,
        floor_ok: floor >= -cfg.tol_floor,
        sup_u: sup,
    })
}

/// Reads `rho A B` rows (whitespace or comma separated, `#` comments) and
/// interpolates `ln A` and `ln (B / sinh^2 rho)` linearly onto the grid.
pub fn read_table(path: &Path, grid: &Grid64) -> Result<RadialMetric64, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Invalid(format!("cannot read table {}: {e}", path.display())))?;
    parse_table(&text, grid)
        .map_err(|msg| ConfigError::Invalid(format!("table {}: {msg}", path.display())))
}

pub fn parse_table(text: &str, grid: &Grid64) -> Result<RadialMetric64, String> {
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let nums: Vec<f64> = fields
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format!("line {}: expected three numbers `rho A B`", index + 1))?;
        let &[r, a, b] = nums.as_slice() else {
            return Err(format!(
                "line {}: expected three numbers `rho A B`",
                index + 1
            ));
        };
        if !(r > 0.0 && a > 0.0 && b > 0.0) {
            return Err(format!("line {}: rho, A and B must be positive", index + 1));
        }
        if rows.last().is_some_and(|p| p.0 >= r) {
            return Err(format!(
                "line {}: rho must be strictly increasing",
                index + 1
            ));
        }
        rows.push((r, a.ln(), b.ln() - 2.0 * r.sinh().ln()));
    }
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(f), Some(l)) if rows.len() >= 2 => (f.0, l.0),
        _ => return Err("needs at least two rows".into()),
    };
    if first > grid.rho_min() || last < grid.rho_max() {
        return Err(format!(
            "covers [{first}, {last}] but the grid needs [{}, {}]",
            grid.rho_min(),
            grid.rho_max()
        ));
    }
    let mut la = Vec::with_capacity(grid.len());
    let mut lb = Vec::with_capacity(grid.len());
    let mut k = 0;
    for &r in grid.rho() {
        while k + 2 < rows.len() && rows[k + 1].0 < r {
            k += 1;
        }
        let (p, q) = (rows[k], rows[k + 1]);
        let s = ((r - p.0) / (q.0 - p.0)).clamp(0.0, 1.0);
        la.push(p.1 + s * (q.1 - p.1));
        lb.push(p.2 + s * (q.2 - p.2));
    }
    Ok(RadialMetric64::from_logs(la, lb))
}
