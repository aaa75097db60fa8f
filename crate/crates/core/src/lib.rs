//! Normalized Ricci-DeTurck flow on rotationally symmetric perturbations of
//! hyperbolic space.
//!
//! Everything is generic over the scalar type; the `*64` aliases fix `f64`.

// `!(x > y)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod gauge;
pub mod grid;
pub mod metric;
pub mod oracle;
pub mod scalar;
pub mod stencil;

pub use analysis::{
    admissible_delta, admissible_gamma, check_exponents, curvature_floor_monitor, fit_decay_rate,
    lambda_reference, rigidity_probe, weighted_decay_check, DecayReport, RigidityTolerances,
    RigidityVerdict, WeightedNorms,
};
pub use curvature::{christoffel, curvature, scalar_defect, Connection, CurvatureData};
pub use error::{Error, Result};
pub use flow::{
    evolve, expanded_rhs, nrdf_rhs, nrdf_rhs_split, rhs_discrepancy, step, FlowState, Halted,
    RateSplit, Rates, Record, RhsDiscrepancy, RunConfig, Snapshot, StepControl, Termination,
    TimeSeries,
};
pub use functionals::{
    boundary_flux, identity_residual, monotonicity_residual, renormalized_volume,
    scalar_defect_integral, volume_difference, MonotonicityResidual, VolumeReport,
};
pub use gauge::{
    advance_diffeo, boundary_layer, deturck_vector, nrf_residual, nrf_residual_with_layer,
    pullback, DiffeoMap, GaugeField, NrfResidual, PULLBACK_BOUNDARY_WIDTH,
};
pub use grid::Grid;
pub use metric::{
    hyperbolic_background, perturbation, perturbation_norm_at, PerturbationField, RadialMetric,
};
pub use scalar::Real;

pub type Grid64 = Grid<f64>;
pub type RadialMetric64 = RadialMetric<f64>;
pub type CurvatureData64 = CurvatureData<f64>;
pub type GaugeField64 = GaugeField<f64>;
pub type DiffeoMap64 = DiffeoMap<f64>;
pub type FlowState64 = FlowState<f64>;
pub type TimeSeries64 = TimeSeries<f64>;
pub type RunConfig64 = RunConfig<f64>;
pub type Record64 = Record<f64>;
