//! Flat `key = value` configuration files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nrdf_core::{admissible_delta, admissible_gamma, Grid64, RigidityTolerances, RunConfig64};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("key {key:?}: cannot parse {value:?} as {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Background,
    Conformal,
    Shear,
    Gauge,
    CustomTable,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Background => "background",
            ScenarioKind::Conformal => "conformal",
            ScenarioKind::Shear => "shear",
            ScenarioKind::Gauge => "gauge",
            ScenarioKind::CustomTable => "custom-table",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "background" => ScenarioKind::Background,
            "conformal" => ScenarioKind::Conformal,
            "shear" => ScenarioKind::Shear,
            "gauge" => ScenarioKind::Gauge,
            "custom-table" => ScenarioKind::CustomTable,
            _ => return Err(()),
        })
    }
}

/// Radial shape `w` of the generated perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Gaussian bump vanishing to second order at both ends.
    Bump,
    /// Rises linearly off `rho_min`; keeps `R + n(n-1) >= 0` for conformal data.
    Edge,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Bump => "bump",
            Profile::Edge => "edge",
        }
    }
}

impl FromStr for Profile {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "bump" => Ok(Profile::Bump),
            "edge" => Ok(Profile::Edge),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub n: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub num_points: usize,
    pub rho_d: f64,
    pub kind: ScenarioKind,
    pub profile: Profile,
    pub amplitude: f64,
    pub tau: f64,
    pub bump_center: f64,
    pub bump_width: f64,
    pub boundary_width: f64,
    pub edge_rate: f64,
    pub weight_sharpness: f64,
    pub table: Option<PathBuf>,
    pub t_final: f64,
    pub cfl: f64,
    pub max_dt: f64,
    pub record_interval: f64,
    pub stop_tol: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    pub tol_floor: f64,
    pub tol_renvol: f64,
    pub tol_defect: f64,
    pub tol_pullback: f64,
    pub rigidity: bool,
    pub seed: u64,
    pub noise: f64,
    pub output_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "run".into(),
            n: 4,
            rho_min: 0.25,
            rho_max: 12.0,
            num_points: 800,
            rho_d: 1.0,
            kind: ScenarioKind::Conformal,
            profile: Profile::Bump,
            amplitude: 1e-3,
            tau: 4.0,
            bump_center: 2.0,
            bump_width: 0.5,
            boundary_width: 0.5,
            edge_rate: 20.0,
            weight_sharpness: 8.0,
            table: None,
            t_final: 10.0,
            cfl: 0.5,
            max_dt: 1e-2,
            record_interval: 0.05,
            stop_tol: 1e-8,
            epsilon: 1e-2,
            delta: 3.4,
            gamma: 1.5,
            tol_floor: 1e-9,
            tol_renvol: 1e-6,
            tol_defect: 1e-5,
            tol_pullback: 1e-4,
            rigidity: false,
            seed: 0,
            noise: 0.0,
            output_dir: None,
        }
    }
}

/// Every accepted key, in the order used for the manifest echo.
pub const KEYS: &[&str] = &[
    "name",
    "n",
    "rho_min",
    "rho_max",
    "num_points",
    "rho_d",
    "kind",
    "profile",
    "amplitude",
    "tau",
    "bump_center",
    "bump_width",
    "boundary_width",
    "edge_rate",
    "weight_sharpness",
    "table",
    "t_final",
    "cfl",
    "max_dt",
    "record_interval",
    "stop_tol",
    "epsilon",
    "delta",
    "gamma",
    "tol_floor",
    "tol_renvol",
    "tol_defect",
    "tol_pullback",
    "rigidity",
    "seed",
    "noise",
    "output_dir",
];

fn parse_num<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        expected,
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
            expected: "a boolean",
        }),
    }
}

/// Config value as written to the manifest echo.
#[derive(Debug, Clone, PartialEq)]
pub enum EchoValue {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl ScenarioConfig {
    /// Parses a config; relative `table` paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                text: raw.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.into(),
                });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.into(),
                });
            }
            cfg.set(key, value, base_dir)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        let mut cfg = Self::parse(&text, path.parent())?;
        if !text.lines().any(|l| {
            l.split('#')
                .next()
                .unwrap_or("")
                .trim_start()
                .starts_with("name")
        }) {
            if let Some(stem) = path.file_stem() {
                cfg.name = stem.to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str, base_dir: Option<&Path>) -> Result<(), ConfigError> {
        let f = |expected| parse_num::<f64>(key, v, expected);
        match key {
            "name" => self.name = v.to_string(),
            "n" => self.n = parse_num(key, v, "an integer")?,
            "rho_min" => self.rho_min = f("a number")?,
            "rho_max" => self.rho_max = f("a number")?,
            "num_points" => self.num_points = parse_num(key, v, "an integer")?,
            "rho_d" => self.rho_d = f("a number")?,
            "kind" => {
                self.kind = v.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    value: v.into(),
                    expected: "one of background, conformal, shear, gauge, custom-table",
                })?
            }
            "profile" => {
                self.profile = v.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    value: v.into(),
                    expected: "one of bump, edge",
                })?
            }
            "amplitude" => self.amplitude = f("a number")?,
            "tau" => self.tau = f("a number")?,
            "bump_center" => self.bump_center = f("a number")?,
            "bump_width" => self.bump_width = f("a number")?,
            "boundary_width" => self.boundary_width = f("a number")?,
            "edge_rate" => self.edge_rate = f("a number")?,
            "weight_sharpness" => self.weight_sharpness = f("a number")?,
            "table" => {
                let p = PathBuf::from(v);
                self.table = Some(match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p,
                });
            }
            "t_final" => self.t_final = f("a number")?,
            "cfl" => self.cfl = f("a number")?,
            "max_dt" => self.max_dt = f("a number")?,
            "record_interval" => self.record_interval = f("a number")?,
            "stop_tol" => self.stop_tol = f("a number")?,
            "epsilon" => self.epsilon = f("a number")?,
            "delta" => self.delta = f("a number")?,
            "gamma" => self.gamma = f("a number")?,
            "tol_floor" => self.tol_floor = f("a number")?,
            "tol_renvol" => self.tol_renvol = f("a number")?,
            "tol_defect" => self.tol_defect = f("a number")?,
            "tol_pullback" => self.tol_pullback = f("a number")?,
            "rigidity" => self.rigidity = parse_bool(key, v)?,
            "seed" => self.seed = parse_num(key, v, "an unsigned integer")?,
            "noise" => self.noise = f("a number")?,
            "output_dir" => self.output_dir = Some(PathBuf::from(v)),
            _ => unreachable!("key list checked by the caller"),
        }
        Ok(())
    }

    /// Checks every invariant; messages name the violated range.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let m = (self.n.max(1) - 1) as f64;
        if self.n < 3 {
            return bad(format!("n = {} must be >= 3", self.n));
        }
        if self.tau <= m {
            return bad(format!("tau = {} must exceed n - 1 = {m}", self.tau));
        }
        let (dlo, dhi) = admissible_delta::<f64>(self.n);
        if !(self.delta > dlo && self.delta < dhi) {
            return bad(format!(
                "delta = {} outside the admissible interval ({dlo}, {dhi})",
                self.delta
            ));
        }
        match admissible_gamma::<f64>(self.n) {
            Some((lo, hi)) if self.gamma > lo && self.gamma < hi => {}
            Some((lo, hi)) => {
                return bad(format!(
                    "gamma = {} outside the admissible interval ({lo}, {hi})",
                    self.gamma
                ))
            }
            // gamma has no admissible range below n = 4 and is ignored there.
            None => {}
        }
        let positive = [
            ("bump_width", self.bump_width),
            ("boundary_width", self.boundary_width),
            ("edge_rate", self.edge_rate),
            ("weight_sharpness", self.weight_sharpness),
            ("record_interval", self.record_interval),
            ("max_dt", self.max_dt),
        ];
        for (key, value) in positive {
            if !(value > 0.0) {
                return bad(format!("{key} = {value} must be > 0"));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl = {} must lie in (0, 1]", self.cfl));
        }
        if !(self.t_final >= 0.0) {
            return bad(format!("t_final = {} must be >= 0", self.t_final));
        }
        if self.weight_sharpness <= self.tau {
            return bad(format!(
                "weight_sharpness = {} must exceed tau = {}",
                self.weight_sharpness, self.tau
            ));
        }
        let nonneg = [
            ("stop_tol", self.stop_tol),
            ("epsilon", self.epsilon),
            ("noise", self.noise),
            ("tol_floor", self.tol_floor),
            ("tol_renvol", self.tol_renvol),
            ("tol_defect", self.tol_defect),
            ("tol_pullback", self.tol_pullback),
        ];
        for (key, value) in nonneg {
            if !(value >= 0.0) {
                return bad(format!("{key} = {value} must be >= 0"));
            }
        }
        if self.kind == ScenarioKind::CustomTable && self.table.is_none() {
            return bad("kind = custom-table requires a `table` path".into());
        }
        self.grid()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn grid(&self) -> nrdf_core::Result<Grid64> {
        Grid64::new(
            self.n,
            self.rho_min,
            self.rho_max,
            self.num_points,
            self.rho_d,
        )
    }

    pub fn run_config(&self) -> RunConfig64 {
        RunConfig64 {
            t_final: self.t_final,
            cfl: self.cfl,
            max_dt: self.max_dt,
            record_interval: self.record_interval,
            stop_tol: self.stop_tol,
            delta: self.delta,
            epsilon: self.epsilon,
            keep_snapshots: true,
        }
    }

    pub fn rigidity_tolerances(&self) -> RigidityTolerances<f64> {
        RigidityTolerances {
            renvol: self.tol_renvol,
            defect: self.tol_defect,
            pullback: self.tol_pullback,
        }
    }

    /// `(key, value)` pairs in [`KEYS`] order.
    pub fn echo(&self) -> Vec<(&'static str, EchoValue)> {
        use EchoValue::*;
        let path = |p: &Option<PathBuf>| {
            Text(
                p.as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            )
        };
        vec![
            ("name", Text(self.name.clone())),
            ("n", Int(self.n as u64)),
            ("rho_min", Float(self.rho_min)),
            ("rho_max", Float(self.rho_max)),
            ("num_points", Int(self.num_points as u64)),
            ("rho_d", Float(self.rho_d)),
            ("kind", Text(self.kind.as_str().into())),
            ("profile", Text(self.profile.as_str().into())),
            ("amplitude", Float(self.amplitude)),
            ("tau", Float(self.tau)),
            ("bump_center", Float(self.bump_center)),
            ("bump_width", Float(self.bump_width)),
            ("boundary_width", Float(self.boundary_width)),
            ("edge_rate", Float(self.edge_rate)),
            ("weight_sharpness", Float(self.weight_sharpness)),
            ("table", path(&self.table)),
            ("t_final", Float(self.t_final)),
            ("cfl", Float(self.cfl)),
            ("max_dt", Float(self.max_dt)),
            ("record_interval", Float(self.record_interval)),
            ("stop_tol", Float(self.stop_tol)),
            ("epsilon", Float(self.epsilon)),
            ("delta", Float(self.delta)),
            ("gamma", Float(self.gamma)),
            ("tol_floor", Float(self.tol_floor)),
            ("tol_renvol", Float(self.tol_renvol)),
            ("tol_defect", Float(self.tol_defect)),
            ("tol_pullback", Float(self.tol_pullback)),
            ("rigidity", Bool(self.rigidity)),
            ("seed", Int(self.seed)),
            ("noise", Float(self.noise)),
            ("output_dir", path(&self.output_dir)),
        ]
    }
}

impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, value) in self.echo() {
            match value {
                EchoValue::Float(x) => writeln!(f, "{key} = {x:e}")?,
                EchoValue::Int(x) => writeln!(f, "{key} = {x}")?,
                EchoValue::Bool(x) => writeln!(f, "{key} = {x}")?,
                EchoValue::Text(s) if s.is_empty() => {}
                EchoValue::Text(s) => writeln!(f, "{key} = {s}")?,
            }
        }
        Ok(())
    }
}
