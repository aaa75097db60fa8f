use thiserror::Error;

/// Failures reported by the geometry, flow and post-processing routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("metric is not positive definite at grid index {index} (rho = {rho})")]
    NonPositiveMetric { index: usize, rho: f64 },

    #[error("grid mismatch: expected {expected} samples, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("time step {dt} exceeds the stability bound {bound}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("metric left the admissible band at grid index {index} (t = {t})")]
    BlowUp { index: usize, t: f64 },

    #[error("diffeomorphism is no longer strictly increasing at grid index {index}")]
    MonotonicityLost { index: usize },

    #[error("series too short: need at least {needed} samples, found {found}")]
    InsufficientSeries { needed: usize, found: usize },

    #[error("renormalized volume tail diverges: measured decay {delta_eff} <= {threshold}")]
    DivergentTail { delta_eff: f64, threshold: f64 },

    #[error("norm must be positive for a log fit (sample {index})")]
    NonPositiveNorm { index: usize },

    #[error("fit window holds {found} samples, need at least {needed}")]
    WindowTooSmall { needed: usize, found: usize },

    #[error("{name} = {value} outside the admissible interval ({lower}, {upper})")]
    InadmissibleExponent {
        name: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("run did not complete; rigidity cannot be assessed")]
    IncompleteRun,

    #[error("run requires gauge tracking snapshots")]
    MissingSnapshots,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
