//! Normalized Ricci-DeTurck flow `dg/dt = -2(Ric + (n-1) g) + L_V g` in the
//! warped-product ansatz, integrated by the method of lines with classical RK4.
//!
//! In log variables the system reads
//!
//! ```text
//! d log_a / dt = -2 E_rho   + e^{-log_a} (2 V_rho' - log_a' V_rho)
//! d log_b / dt = -2 E_theta + e^{-log_a} (B'/B) V_rho
//! ```
//!
//! whose principal part is a diffusion with coefficient `1/A`.

use std::time::Instant;

use crate::analysis::curvature_floor;
use crate::curvature::{curvature_from_jet, PointJet};
use crate::error::{Error, Result};
use crate::functionals::{
    boundary_flux_from_gauge, defect_integral_from_curvature, volume_difference,
};
use crate::gauge::{gauge_from_jets, map_velocity, DiffeoMap, GaugeField};
use crate::grid::Grid;
use crate::metric::{perturbation, Jet, RadialMetric};
use crate::scalar::Real;
use crate::stencil::{d1, d2};

/// Log of the admissible band `[1e-6, 1e6]` for `A/A~` and `B/B~`.
pub const BLOW_UP_LOG_BOUND: f64 = 13.815510557964274;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<T> {
    pub t: T,
    pub metric: RadialMetric<T>,
    pub step_index: usize,
}

impl<T: Real> FlowState<T> {
    pub fn new(metric: RadialMetric<T>) -> Self {
        Self {
            t: T::zero(),
            metric,
            step_index: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl<T> {
    pub dt: T,
    pub cfl: T,
    pub max_dt: T,
}

impl<T: Real> StepControl<T> {
    pub fn new(dt: T) -> Self {
        Self {
            dt,
            cfl: T::lit(0.5),
            max_dt: T::lit(1e-2),
        }
    }

    /// `cfl * h^2 / max(1/A)`, the explicit parabolic limit.
    pub fn stability_bound(&self, metric: &RadialMetric<T>, grid: &Grid<T>) -> T {
        let h = grid.spacing();
        let min_log_a = metric
            .log_a()
            .iter()
            .fold(T::infinity(), |acc, &v| acc.min(v));
        self.cfl * h * h * min_log_a.exp()
    }

    /// Largest admissible step for `metric`.
    pub fn admissible_dt(&self, metric: &RadialMetric<T>, grid: &Grid<T>) -> T {
        self.stability_bound(metric, grid).min(self.max_dt)
    }

    pub fn check(&self, metric: &RadialMetric<T>, grid: &Grid<T>) -> Result<()> {
        let bound = self.admissible_dt(metric, grid);
        let slack = T::one() + T::lit(1e-12);
        if !(self.dt > T::zero()) || self.dt > bound * slack {
            return Err(Error::CflViolation {
                dt: self.dt.as_f64(),
                bound: bound.as_f64(),
            });
        }
        Ok(())
    }
}

/// Time derivatives of `log_a` and `log_b`; `dA/dt = A * d_log_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates<T> {
    pub d_log_a: Vec<T>,
    pub d_log_b: Vec<T>,
}

impl<T: Real> Rates<T> {
    fn zeros(n: usize) -> Self {
        Self {
            d_log_a: vec![T::zero(); n],
            d_log_b: vec![T::zero(); n],
        }
    }

    /// `dA/dt` at every grid point.
    pub fn d_a(&self, metric: &RadialMetric<T>) -> Vec<T> {
        self.d_log_a
            .iter()
            .enumerate()
            .map(|(i, &r)| r * metric.a(i))
            .collect()
    }

    /// `dB/dt` at every grid point.
    pub fn d_b(&self, metric: &RadialMetric<T>, grid: &Grid<T>) -> Vec<T> {
        self.d_log_b
            .iter()
            .enumerate()
            .map(|(i, &r)| r * metric.b(grid, i))
            .collect()
    }

    pub fn sup(&self) -> T {
        self.d_log_a
            .iter()
            .chain(&self.d_log_b)
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.d_log_a
            .iter()
            .chain(&self.d_log_b)
            .all(|v| v.is_finite())
    }
}

/// The two pieces of the NRDF right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSplit<T> {
    /// `-2(Ric + (n-1) g)`.
    pub ricci: Rates<T>,
    /// `L_V g = nabla V + (nabla V)^T`.
    pub gauge: Rates<T>,
}

impl<T: Real> RateSplit<T> {
    pub fn total(&self) -> Rates<T> {
        let add = |x: &[T], y: &[T]| x.iter().zip(y).map(|(&a, &b)| a + b).collect();
        Rates {
            d_log_a: add(&self.ricci.d_log_a, &self.gauge.d_log_a),
            d_log_b: add(&self.ricci.d_log_b, &self.gauge.d_log_b),
        }
    }
}

/// Evaluation cache bound to one grid and background.
/// New metric, new map shift (when one was carried) and the gauge field at
/// the start of an RK4 step.
pub(crate) type StepOutput<T> = (RadialMetric<T>, Option<Vec<T>>, GaugeField<T>);

pub(crate) struct Engine<'a, T> {
    grid: &'a Grid<T>,
    background: &'a RadialMetric<T>,
    bg_jet: Jet<T>,
    delta: T,
}

pub(crate) struct Evaluation<T> {
    pub jet: Jet<T>,
    pub split: RateSplit<T>,
    pub gauge: GaugeField<T>,
}

impl<'a, T: Real> Engine<'a, T> {
    pub fn new(background: &'a RadialMetric<T>, grid: &'a Grid<T>, delta: T) -> Result<Self> {
        Ok(Self {
            grid,
            background,
            bg_jet: Jet::of(background, grid)?,
            delta,
        })
    }

    pub fn evaluate(&self, metric: &RadialMetric<T>) -> Result<Evaluation<T>> {
        let grid = self.grid;
        let jet = Jet::of(metric, grid)?;
        let gauge = gauge_from_jets(&jet, &self.bg_jet, grid, self.delta);
        let n = grid.len();
        let m = grid.sphere_dim();
        let two = T::lit(2.0);
        let mut split = RateSplit {
            ricci: Rates::zeros(n),
            gauge: Rates::zeros(n),
        };
        // End points are pinned: their rates stay zero.
        for i in 1..n - 1 {
            let point = PointJet::at(&jet, grid, i);
            let (e_rho, e_theta) = point.einstein_defects(m);
            let inv_a = (-point.alpha).exp();
            let v = gauge.v_rho[i];
            let dv = gauge.dv_rho[i];
            split.ricci.d_log_a[i] = -two * e_rho;
            split.ricci.d_log_b[i] = -two * e_theta;
            split.gauge.d_log_a[i] = inv_a * (two * dv - point.d_alpha * v);
            split.gauge.d_log_b[i] = inv_a * point.log_b_slope() * v;
        }
        Ok(Evaluation { jet, split, gauge })
    }

    fn pin(&self, log_a: &mut [T], log_b: &mut [T]) {
        let n = log_a.len();
        for i in [0, n - 1] {
            log_a[i] = self.background.log_a()[i];
            log_b[i] = self.background.log_b()[i];
        }
    }

    /// Fails with `BlowUp` once `A/A~` or `B/B~` leaves `[1e-6, 1e6]`.
    fn check_band(&self, metric: &RadialMetric<T>, t: T) -> Result<()> {
        let bound = T::lit(BLOW_UP_LOG_BOUND);
        for i in 0..metric.len() {
            let da = metric.log_a()[i] - self.background.log_a()[i];
            let db = metric.log_b()[i] - self.background.log_b()[i];
            if !(da.abs() <= bound) || !(db.abs() <= bound) {
                return Err(Error::BlowUp {
                    index: i,
                    t: t.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// One RK4 step of the metric, optionally carrying the gauge map along.
    pub fn rk4(
        &self,
        metric: &RadialMetric<T>,
        shift: Option<&[T]>,
        dt: T,
    ) -> Result<StepOutput<T>> {
        let n = self.grid.len();
        let two = T::lit(2.0);
        let six = T::lit(6.0);
        let half_dt = dt / two;
        let mut ka: Vec<Vec<T>> = Vec::with_capacity(4);
        let mut kb: Vec<Vec<T>> = Vec::with_capacity(4);
        let mut kp: Vec<Vec<T>> = Vec::with_capacity(4);
        let mut first_gauge = None;
        let mut stage_metric = metric.clone();
        let mut stage_shift = shift.map(|p| p.to_vec());
        for s in 0..4 {
            let eval = self.evaluate(&stage_metric)?;
            let total = eval.split.total();
            if let Some(p) = &stage_shift {
                let mut vel = vec![T::zero(); n];
                map_velocity(self.grid, &eval.gauge.v_up, p, &mut vel);
                kp.push(vel);
            }
            ka.push(total.d_log_a);
            kb.push(total.d_log_b);
            if s == 0 {
                first_gauge = Some(eval.gauge);
            }
            if s < 3 {
                let scale = if s == 2 { dt } else { half_dt };
                let la = metric
                    .log_a()
                    .iter()
                    .zip(&ka[s])
                    .map(|(&x, &k)| x + scale * k)
                    .collect();
                let lb = metric
                    .log_b()
                    .iter()
                    .zip(&kb[s])
                    .map(|(&x, &k)| x + scale * k)
                    .collect();
                stage_metric = RadialMetric::from_logs(la, lb);
                if let (Some(p0), Some(sp)) = (shift, stage_shift.as_mut()) {
                    for i in 0..n {
                        sp[i] = p0[i] + scale * kp[s][i];
                    }
                }
            }
        }
        let combine = |x0: &[T], k: &[Vec<T>]| -> Vec<T> {
            (0..n)
                .map(|i| x0[i] + dt / six * (k[0][i] + two * k[1][i] + two * k[2][i] + k[3][i]))
                .collect::<Vec<T>>()
        };
        let mut la = combine(metric.log_a(), &ka);
        let mut lb = combine(metric.log_b(), &kb);
        self.pin(&mut la, &mut lb);
        let next_shift = shift.map(|p0| combine(p0, &kp));
        Ok((
            RadialMetric::from_logs(la, lb),
            next_shift,
            first_gauge.expect("four stages ran"),
        ))
    }
}

/// NRDF right-hand side with the two end points pinned (zero rate).
pub fn nrdf_rhs<T: Real>(
    state: &FlowState<T>,
    background: &RadialMetric<T>,
    grid: &Grid<T>,
) -> Result<Rates<T>> {
    Ok(nrdf_rhs_split(state, background, grid)?.total())
}

/// NRDF right-hand side split into its Ricci and gauge parts.
pub fn nrdf_rhs_split<T: Real>(
    state: &FlowState<T>,
    background: &RadialMetric<T>,
    grid: &Grid<T>,
) -> Result<RateSplit<T>> {
    grid.check_len(background.len())?;
    let engine = Engine::new(background, grid, T::zero())?;
    Ok(engine.evaluate(&state.metric)?.split)
}

/// The NRDF right-hand side in expanded divergence form, built from the
/// background covariant derivatives of the raw coefficients `A` and
/// `B / sinh^2`, with the hyperbolic background (`W~ = 0`).
///
/// It shares no code with [`nrdf_rhs`] beyond the finite-difference stencils
/// and is meant as an independent check. End points are evaluated too.
pub fn expanded_rhs<T: Real>(metric: &RadialMetric<T>, grid: &Grid<T>) -> Result<Rates<T>> {
    metric.validate(grid)?;
    let n_pts = grid.len();
    let dim = grid.dim();
    let h = grid.spacing();
    let a: Vec<T> = metric.a_values();
    let b: Vec<T> = metric.log_b().iter().map(|v| v.exp()).collect();
    let (da, dda) = (d1(&a, h), d2(&a, h));
    let (db, ddb) = (d1(&b, h), d2(&b, h));

    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let e0 = |i: usize| if i == 0 { one } else { zero };
    let proj = |k: usize, i: usize| if k == i && k > 0 { one } else { zero };
    let kron = |i: usize, j: usize| if i == j { one } else { zero };

    let mut dg = vec![zero; dim * dim * dim];
    let idx3 = |k: usize, i: usize, j: usize| (k * dim + i) * dim + j;
    let mut rates = Rates::zeros(n_pts);
    for p in 0..n_pts {
        let c = grid.coth()[p];
        let csch2 = grid.csch2()[p];
        let phi = a[p] - b[p];
        let dphi = da[p] - db[p];
        let ddphi = dda[p] - ddb[p];
        let psi = phi * c;
        let dpsi = dphi * c - phi * csch2;
        let g = |i: usize| if i == 0 { a[p] } else { b[p] };
        let ginv = |i: usize| one / g(i);

        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    dg[idx3(k, i, j)] = dphi * e0(k) * e0(i) * e0(j)
                        + db[p] * e0(k) * kron(i, j)
                        + psi * (proj(k, i) * e0(j) + proj(k, j) * e0(i));
                }
            }
        }
        let nabla_proj =
            |l: usize, k: usize, i: usize| -c * (proj(l, k) * e0(i) + e0(k) * proj(l, i));
        let d2g = |l: usize, k: usize, i: usize, j: usize| -> T {
            ddphi * e0(l) * e0(k) * e0(i) * e0(j)
                + dphi
                    * c
                    * (proj(l, k) * e0(i) * e0(j)
                        + e0(k) * proj(l, i) * e0(j)
                        + e0(k) * e0(i) * proj(l, j))
                + ddb[p] * e0(l) * e0(k) * kron(i, j)
                + db[p] * c * proj(l, k) * kron(i, j)
                + dpsi * e0(l) * (proj(k, i) * e0(j) + proj(k, j) * e0(i))
                + psi
                    * (nabla_proj(l, k, i) * e0(j)
                        + c * proj(k, i) * proj(l, j)
                        + nabla_proj(l, k, j) * e0(i)
                        + c * proj(k, j) * proj(l, i))
        };
        let trace_u: T = (0..dim).map(|k| ginv(k) * (g(k) - one)).sum();
        let component = |i: usize| -> T {
            let j = i;
            let lap: T = (0..dim).map(|q| ginv(q) * d2g(q, q, i, j)).sum();
            let mut quad = zero;
            for aa in 0..dim {
                for pp in 0..dim {
                    let w = ginv(aa) * ginv(pp);
                    let term = dg[idx3(i, pp, aa)] * dg[idx3(j, pp, aa)]
                        + two * dg[idx3(aa, j, pp)] * dg[idx3(pp, i, aa)]
                        - two * dg[idx3(aa, j, pp)] * dg[idx3(aa, i, pp)]
                        - two * dg[idx3(j, pp, aa)] * dg[idx3(aa, i, pp)]
                        - two * dg[idx3(i, pp, aa)] * dg[idx3(aa, j, pp)];
                    quad = quad + w * term;
                }
            }
            lap - two * g(i) * trace_u + two * (g(i) - one) + half * quad
        };
        rates.d_log_a[p] = component(0) / a[p];
        rates.d_log_b[p] = component(1) / b[p];
    }
    Ok(rates)
}

/// Pointwise gap between the direct and the expanded right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsDiscrepancy<T> {
    pub pointwise: Vec<T>,
    pub max_log_a: T,
    pub max_log_b: T,
}

/// Compares [`nrdf_rhs`] against [`expanded_rhs`] on the grid interior,
/// relative to the hyperbolic background.
pub fn rhs_discrepancy<T: Real>(
    metric: &RadialMetric<T>,
    grid: &Grid<T>,
) -> Result<RhsDiscrepancy<T>> {
    let background = crate::metric::hyperbolic_background(grid);
    let direct = nrdf_rhs(&FlowState::new(metric.clone()), &background, grid)?;
    let expanded = expanded_rhs(metric, grid)?;
    let n = grid.len();
    let mut out = RhsDiscrepancy {
        pointwise: vec![T::zero(); n],
        max_log_a: T::zero(),
        max_log_b: T::zero(),
    };
    for i in 1..n - 1 {
        let ea = (direct.d_log_a[i] - expanded.d_log_a[i]).abs();
        let eb = (direct.d_log_b[i] - expanded.d_log_b[i]).abs();
        out.pointwise[i] = ea.max(eb);
        out.max_log_a = out.max_log_a.max(ea);
        out.max_log_b = out.max_log_b.max(eb);
    }
    Ok(out)
}

/// One RK4 step; the end points are reset to the background.
pub fn step<T: Real>(
    state: &FlowState<T>,
    control: &StepControl<T>,
    background: &RadialMetric<T>,
    grid: &Grid<T>,
) -> Result<FlowState<T>> {
    grid.check_len(background.len())?;
    control.check(&state.metric, grid)?;
    let engine = Engine::new(background, grid, T::zero())?;
    let (metric, _, _) = engine.rk4(&state.metric, None, control.dt)?;
    let t = state.t + control.dt;
    engine.check_band(&metric, t)?;
    Ok(FlowState {
        t,
        metric,
        step_index: state.step_index + 1,
    })
}

/// Parameters of [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig<T> {
    pub t_final: T,
    pub cfl: T,
    pub max_dt: T,
    /// Flow time between recorded samples; the step is shrunk so that every
    /// interval is an integer number of steps.
    pub record_interval: T,
    /// The run stops at the first record with `sup |u| < stop_tol`.
    pub stop_tol: T,
    /// Weight exponent for the weighted norms.
    pub delta: T,
    /// Smallness threshold on `sup |u(0)|`, reported as a flag.
    pub epsilon: T,
    /// Keep `(t, g, phi)` at every record.
    pub keep_snapshots: bool,
}

impl<T: Real> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            t_final: T::lit(10.0),
            cfl: T::lit(0.5),
            max_dt: T::lit(1e-2),
            record_interval: T::lit(0.05),
            stop_tol: T::lit(1e-8),
            delta: T::lit(3.4),
            epsilon: T::lit(1e-2),
            keep_snapshots: true,
        }
    }
}

/// One row of diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record<T> {
    pub t: T,
    pub sup_u: T,
    pub l2_u: T,
    pub weighted_sup_u: T,
    pub sup_v: T,
    pub weighted_sup_v: T,
    pub renvol: T,
    pub defect_integral: T,
    pub boundary_flux: T,
    pub curvature_floor: T,
    /// Weighted sup of `R + n(n-1)`.
    pub weighted_defect: T,
    pub dt: T,
    /// Wall-clock seconds since the start of the run; not reproducible.
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub t: T,
    pub metric: RadialMetric<T>,
    pub map: DiffeoMap<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// Reached the final time.
    Completed,
    /// `sup |u|` dropped below the stop tolerance.
    Converged,
    Halted(Error),
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Converged => "converged",
            Termination::Halted(Error::BlowUp { .. }) => "halted:blow_up",
            Termination::Halted(Error::NonPositiveMetric { .. }) => "halted:non_positive_metric",
            Termination::Halted(Error::MonotonicityLost { .. }) => "halted:monotonicity_lost",
            Termination::Halted(_) => "halted",
        }
    }

    pub fn is_halted(&self) -> bool {
        matches!(self, Termination::Halted(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub records: Vec<Record<T>>,
    pub snapshots: Vec<Snapshot<T>>,
    pub termination: Termination,
    pub final_state: FlowState<T>,
    pub final_map: DiffeoMap<T>,
    pub initial_within_epsilon: bool,
    /// `int_0^t sup |V^rho| dt'`, the a-priori bound on the map drift.
    pub drift_integral: T,
    /// `sup_t sup_rho |phi - rho|`.
    pub max_drift: T,
}

impl<T: Real> TimeSeries<T> {
    pub fn last(&self) -> Option<&Record<T>> {
        self.records.last()
    }

    /// Columns `(t, value)` extracted by `f`.
    pub fn column(&self, f: impl Fn(&Record<T>) -> T) -> Vec<(T, T)> {
        self.records.iter().map(|r| (r.t, f(r))).collect()
    }
}

/// A run that stopped early. The series holds everything up to the last
/// valid state.
#[derive(Debug, Clone, PartialEq)]
pub struct Halted<T> {
    pub reason: Error,
    pub series: Box<TimeSeries<T>>,
}

impl<T: Real> std::fmt::Display for Halted<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "run halted at t = {}: {}",
            self.series.final_state.t, self.reason
        )
    }
}

impl<T: Real> std::error::Error for Halted<T> {}

#[allow(clippy::too_many_arguments)]
pub(crate) fn record_of<T: Real>(
    eval: &Evaluation<T>,
    metric: &RadialMetric<T>,
    background: &RadialMetric<T>,
    grid: &Grid<T>,
    t: T,
    dt: T,
    delta: T,
    elapsed: f64,
) -> Result<Record<T>> {
    let pert = perturbation(metric, background, grid, delta)?;
    let curv = curvature_from_jet(&eval.jet, metric, grid);
    let mut weighted_defect = T::zero();
    for (i, &s) in curv.scalar_defect.iter().enumerate() {
        weighted_defect = weighted_defect.max(s.abs() * grid.weight(i, delta));
    }
    Ok(Record {
        t,
        sup_u: pert.sup_norm,
        l2_u: pert.l2_norm,
        weighted_sup_u: pert.weighted_sup,
        sup_v: eval.gauge.sup_norm,
        weighted_sup_v: eval.gauge.weighted_sup,
        renvol: volume_difference(metric, background, grid)?,
        defect_integral: defect_integral_from_curvature(&curv, metric, grid),
        boundary_flux: boundary_flux_from_gauge(&eval.gauge, metric, grid),
        curvature_floor: curvature_floor(&curv.scalar_defect),
        weighted_defect,
        dt,
        elapsed,
    })
}

/// Runs the NRDF from `initial`, integrating the gauge map in lockstep.
pub fn evolve<T: Real>(
    initial: &RadialMetric<T>,
    config: &RunConfig<T>,
    background: &RadialMetric<T>,
    grid: &Grid<T>,
) -> Result<TimeSeries<T>, Halted<T>> {
    let clock = Instant::now();
    let mut series = TimeSeries {
        records: Vec::new(),
        snapshots: Vec::new(),
        termination: Termination::Completed,
        final_state: FlowState::new(initial.clone()),
        final_map: DiffeoMap::identity(grid),
        initial_within_epsilon: false,
        drift_integral: T::zero(),
        max_drift: T::zero(),
    };
    let halt = |mut series: TimeSeries<T>, reason: Error| {
        series.termination = Termination::Halted(reason.clone());
        Err(Halted {
            reason,
            series: Box::new(series),
        })
    };
    let setup = (|| -> Result<Engine<'_, T>> {
        grid.check_len(initial.len())?;
        grid.check_len(background.len())?;
        initial.validate(grid)?;
        if !(config.record_interval > T::zero()) || !(config.t_final >= T::zero()) {
            return Err(Error::InvalidGrid(
                "record_interval must be > 0 and t_final >= 0".into(),
            ));
        }
        Engine::new(background, grid, config.delta)
    })();
    let engine = match setup {
        Ok(e) => e,
        Err(e) => return halt(series, e),
    };
    let control = StepControl {
        dt: config.max_dt,
        cfl: config.cfl,
        max_dt: config.max_dt,
    };

    let mut state = FlowState::new(initial.clone());
    let mut phi = DiffeoMap::identity(grid);
    let tiny = config.record_interval * T::lit(1e-9);
    let mut interval_index = 0usize;
    loop {
        let eval = match engine.evaluate(&state.metric) {
            Ok(e) => e,
            Err(e) => return halt(series, e),
        };
        let bound = control.admissible_dt(&state.metric, grid);
        let steps = (config.record_interval / bound).ceil().max(T::one());
        let dt = config.record_interval / steps;
        let record = match record_of(
            &eval,
            &state.metric,
            background,
            grid,
            state.t,
            dt,
            config.delta,
            clock.elapsed().as_secs_f64(),
        ) {
            Ok(r) => r,
            Err(e) => return halt(series, e),
        };
        if interval_index == 0 {
            series.initial_within_epsilon = record.sup_u <= config.epsilon;
        }
        series.records.push(record);
        if config.keep_snapshots {
            series.snapshots.push(Snapshot {
                t: state.t,
                metric: state.metric.clone(),
                map: phi.clone(),
            });
        }
        series.final_state = state.clone();
        series.final_map = phi.clone();
        if record.sup_u < config.stop_tol && interval_index > 0 {
            series.termination = Termination::Converged;
            return Ok(series);
        }
        if state.t >= config.t_final - tiny {
            series.termination = Termination::Completed;
            return Ok(series);
        }
        let steps = steps.to_usize().unwrap_or(usize::MAX);
        let t0 = state.t;
        for k in 0..steps {
            let (metric, next_shift, gauge) = match engine.rk4(&state.metric, Some(phi.shift()), dt)
            {
                Ok(out) => out,
                Err(e) => return halt(series, e),
            };
            let t = t0 + dt * T::from_usize_lossy(k + 1);
            if let Err(e) = engine.check_band(&metric, t) {
                return halt(series, e);
            }
            let map = match DiffeoMap::from_shift(grid, next_shift.expect("map carried")) {
                Ok(map) => map,
                Err(e) => return halt(series, e),
            };
            let sup_up = gauge
                .v_up
                .iter()
                .fold(T::zero(), |acc, &v| acc.max(v.abs()));
            series.drift_integral = series.drift_integral + sup_up * dt;
            series.max_drift = series.max_drift.max(map.drift());
            phi = map;
            state = FlowState {
                t,
                metric,
                step_index: state.step_index + 1,
            };
        }
        interval_index += 1;
        // Snap to the exact multiple of the interval to avoid drift in t.
        state.t = config.record_interval * T::from_usize_lossy(interval_index);
    }
}
