//! Experiment harness for `nrdf-core`: configs, scenario generation, runs
//! and bit-stable output files.

// `!(x > y)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod config;
pub mod manifest;
pub mod run;
pub mod scenario;

pub use config::{ConfigError, Profile, ScenarioConfig, ScenarioKind};
pub use manifest::{Manifest, Value, CSV_COLUMNS, WALL_CLOCK_KEYS};
pub use run::{execute, run_dir, run_experiment, Experiment, RunOutcome};
pub use scenario::{generate_scenario, Scenario, ScenarioReport};
