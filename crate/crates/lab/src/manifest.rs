//! Flat JSON manifest and CSV time series.

use std::io::Write;
use std::path::Path;

use nrdf_core::{Grid64, Record64};
use sha2::{Digest, Sha256};

/// Manifest keys that depend on the wall clock and differ between reruns.
pub const WALL_CLOCK_KEYS: &[&str] = &["start_wall_clock", "end_wall_clock", "wall_seconds"];

/// Column header of `timeseries.csv`.
pub const CSV_COLUMNS: &[&str] = &[
    "t",
    "sup_u",
    "l2_u",
    "weighted_sup_u",
    "sup_V",
    "weighted_sup_V",
    "renvol",
    "defect_integral",
    "boundary_flux",
    "curvature_floor",
    "dt",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Null,
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Float(x) => Some(x),
            Value::Int(x) => Some(x as f64),
            _ => None,
        }
    }

    fn to_json(&self) -> String {
        match self {
            Value::Float(x) if x.is_finite() => format_float(*x),
            Value::Float(_) | Value::Null => "null".into(),
            Value::Int(x) => x.to_string(),
            Value::Bool(x) => x.to_string(),
            Value::Text(s) => serde_json::to_string(s).expect("strings always serialize"),
        }
    }
}

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Ordered key/value pairs written as one flat JSON object.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, Value)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `key`, replacing an existing entry in place.
    pub fn set(&mut self, key: impl Into<String>, value: Value) {
        let key = key.into();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn float(&mut self, key: &str, x: f64) {
        self.set(key, Value::Float(x));
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        for (index, (key, value)) in self.entries.iter().enumerate() {
            let sep = if index + 1 == self.entries.len() {
                ""
            } else {
                ","
            };
            let key = serde_json::to_string(key).expect("strings always serialize");
            out.push_str(&format!("  {key}: {}{sep}\n", value.to_json()));
        }
        out.push_str("}\n");
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}

/// SHA-256 over the little-endian bytes of `n` and every grid point.
pub fn grid_hash(grid: &Grid64) -> String {
    let mut hasher = Sha256::new();
    hasher.update((grid.dim() as u64).to_le_bytes());
    for r in grid.rho() {
        hasher.update(r.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

/// The CSV cells of one record, in [`CSV_COLUMNS`] order.
pub fn csv_row(r: &Record64) -> [f64; 11] {
    [
        r.t,
        r.sup_u,
        r.l2_u,
        r.weighted_sup_u,
        r.sup_v,
        r.weighted_sup_v,
        r.renvol,
        r.defect_integral,
        r.boundary_flux,
        r.curvature_floor,
        r.dt,
    ]
}

pub fn write_csv(records: &[Record64], out: impl Write) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_COLUMNS)?;
    for r in records {
        writer.write_record(csv_row(r).iter().map(|&x| format_float(x)))?;
    }
    writer.flush()?;
    Ok(())
}
