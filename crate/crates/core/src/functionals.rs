//! Renormalized volume and the terms of its evolution identity
//!
//! ```text
//! d/dt V(g) = - int (R + n(n-1)) dmu_g + int_{boundary} <V, nu>_g dsigma.
//! ```

use crate::curvature::{curvature_from_jet, CurvatureData};
use crate::error::{Error, Result};
use crate::gauge::{gauge_from_jets, GaugeField};
use crate::grid::Grid;
use crate::metric::{Jet, RadialMetric};
use crate::scalar::{unit_sphere_area, Real};
use crate::stencil::trapezoid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeReport<T> {
    pub renvol: T,
    /// Estimated magnitude of the volume difference beyond `rho_max`.
    pub tail_bound: T,
    /// Measured decay exponent of `|g - g~|` near `rho_max`; infinite when
    /// the integrand vanishes there.
    pub delta_eff: T,
    pub defect_integral: T,
    pub boundary_flux: T,
}

/// Integrand of the volume difference, `sqrt(A~) B~^{m/2} (e^{x} - 1)` with
/// `x = (dlog_a + m dlog_b)/2`, so that tiny perturbations at large radius
/// are not lost to cancellation.
fn volume_difference_density<T: Real>(
    metric: &RadialMetric<T>,
    background: &RadialMetric<T>,
    grid: &Grid<T>,
) -> Vec<T> {
    let m = T::from_usize_lossy(grid.sphere_dim());
    let half = T::lit(0.5);
    (0..grid.len())
        .map(|i| {
            let x = half * (metric.log_a()[i] - background.log_a()[i])
                + half * m * (metric.log_b()[i] - background.log_b()[i]);
            background.volume_density(grid, i) * x.exp_m1()
        })
        .collect()
}

/// `vol(g) - vol(g~)` over the truncated domain.
pub fn volume_difference<T: Real>(
    metric: &RadialMetric<T>,
    background: &RadialMetric<T>,
    grid: &Grid<T>,
) -> Result<T> {
    grid.check_len(metric.len())?;
    grid.check_len(background.len())?;
    let density = volume_difference_density(metric, background, grid);
    Ok(unit_sphere_area::<T>(grid.sphere_dim()) * trapezoid(&density, grid.spacing()))
}

/// Fraction of the grid, counted from `rho_min`, where the tail window starts and ends.
const TAIL_WINDOW: (f64, f64) = (0.8, 0.95);

/// Log-slope fit of `|density|` on the tail window: `(slope, value at window end)`.
fn tail_fit<T: Real>(density: &[T], grid: &Grid<T>) -> Option<(T, T, usize)> {
    let n = density.len();
    let lo = (TAIL_WINDOW.0 * n as f64) as usize;
    let hi = ((TAIL_WINDOW.1 * n as f64) as usize).min(n - 1);
    let points: Vec<(T, T)> = (lo..=hi)
        .filter(|&i| density[i] != T::zero())
        .map(|i| (grid.rho()[i], density[i].abs().ln()))
        .collect();
    if points.len() < 3 {
        return None;
    }
    let count = T::from_usize_lossy(points.len());
    let mean_x = points.iter().map(|p| p.0).sum::<T>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<T>() / count;
    let sxx: T = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: T = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Some((sxy / sxx, density[hi].abs(), hi))
}

/// Renormalized volume with its tail estimate, defect integral and flux.
pub fn renormalized_volume<T: Real>(
    metric: &RadialMetric<T>,
    background: &RadialMetric<T>,
    grid: &Grid<T>,
) -> Result<VolumeReport<T>> {
    grid.check_len(metric.len())?;
    grid.check_len(background.len())?;
    let area = unit_sphere_area::<T>(grid.sphere_dim());
    let density = volume_difference_density(metric, background, grid);
    let renvol = area * trapezoid(&density, grid.spacing());
    let m = T::from_usize_lossy(grid.sphere_dim());
    let (tail_bound, delta_eff) = match tail_fit(&density, grid) {
        None => (T::zero(), T::infinity()),
        Some((slope, end_value, end_index)) => {
            let delta_eff = m - slope;
            if !(delta_eff > m) {
                return Err(Error::DivergentTail {
                    delta_eff: delta_eff.as_f64(),
                    threshold: m.as_f64(),
                });
            }
            let gap = grid.rho_max() - grid.rho()[end_index];
            (area * end_value * (slope * gap).exp() / (-slope), delta_eff)
        }
    };
    let jet = Jet::of(metric, grid)?;
    let bg_jet = Jet::of(background, grid)?;
    let curv = curvature_from_jet(&jet, metric, grid);
    let gauge = gauge_from_jets(&jet, &bg_jet, grid, T::zero());
    Ok(VolumeReport {
        renvol,
        tail_bound,
        delta_eff,
        defect_integral: defect_integral_from_curvature(&curv, metric, grid),
        boundary_flux: boundary_flux_from_gauge(&gauge, metric, grid),
    })
}

pub(crate) fn defect_integral_from_curvature<T: Real>(
    curv: &CurvatureData<T>,
    metric: &RadialMetric<T>,
    grid: &Grid<T>,
) -> T {
    let density: Vec<T> = (0..grid.len())
        .map(|i| curv.scalar_defect[i] * metric.volume_density(grid, i))
        .collect();
    unit_sphere_area::<T>(grid.sphere_dim()) * trapezoid(&density, grid.spacing())
}

/// `int (R + n(n-1)) dmu_g` over the truncated domain.
pub fn scalar_defect_integral<T: Real>(metric: &RadialMetric<T>, grid: &Grid<T>) -> Result<T> {
    let jet = Jet::of(metric, grid)?;
    let curv = curvature_from_jet(&jet, metric, grid);
    Ok(defect_integral_from_curvature(&curv, metric, grid))
}

/// Outward flux density `<V, nu>_g |S_rho|_g` at grid index `i`.
fn flux_at<T: Real>(
    gauge: &GaugeField<T>,
    metric: &RadialMetric<T>,
    grid: &Grid<T>,
    i: usize,
) -> T {
    let m = T::from_usize_lossy(grid.sphere_dim());
    let half = T::lit(0.5);
    let area_density = (m * (half * metric.log_b()[i] + grid.ln_sinh()[i])).exp();
    gauge.v_rho[i] * (-half * metric.log_a()[i]).exp() * area_density
}

pub(crate) fn boundary_flux_from_gauge<T: Real>(
    gauge: &GaugeField<T>,
    metric: &RadialMetric<T>,
    grid: &Grid<T>,
) -> T {
    let last = grid.len() - 1;
    let net = flux_at(gauge, metric, grid, last) - flux_at(gauge, metric, grid, 0);
    unit_sphere_area::<T>(grid.sphere_dim()) * net
}

/// `int_{boundary} <V, nu>_g dsigma` over both boundary spheres of the
/// truncated domain (outer minus inner, both with outward normals).
pub fn boundary_flux<T: Real>(
    metric: &RadialMetric<T>,
    gauge: &GaugeField<T>,
    grid: &Grid<T>,
) -> Result<T> {
    grid.check_len(metric.len())?;
    grid.check_len(gauge.v_rho.len())?;
    Ok(boundary_flux_from_gauge(gauge, metric, grid))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityResidual<T> {
    pub times: Vec<T>,
    pub per_time: Vec<T>,
    pub max: T,
}

/// `|dV/dt + defect - flux|` at interior sample times, with `dV/dt` taken by
/// central differences of the volume column.
pub fn identity_residual<T: Real>(
    times: &[T],
    renvol: &[T],
    defect: &[T],
    flux: &[T],
) -> Result<MonotonicityResidual<T>> {
    let len = times.len();
    if len < 3 {
        return Err(Error::InsufficientSeries {
            needed: 3,
            found: len,
        });
    }
    if renvol.len() != len || defect.len() != len || flux.len() != len {
        return Err(Error::GridMismatch {
            expected: len,
            found: renvol.len().min(defect.len()).min(flux.len()),
        });
    }
    let mut out = MonotonicityResidual {
        times: Vec::with_capacity(len - 2),
        per_time: Vec::with_capacity(len - 2),
        max: T::zero(),
    };
    for k in 1..len - 1 {
        let rate = (renvol[k + 1] - renvol[k - 1]) / (times[k + 1] - times[k - 1]);
        let r = (rate + defect[k] - flux[k]).abs();
        out.times.push(times[k]);
        out.per_time.push(r);
        out.max = out.max.max(r);
    }
    Ok(out)
}

/// Residual of the volume identity along `(t, g, V)` samples.
pub fn monotonicity_residual<T: Real>(
    series: &[(T, RadialMetric<T>, GaugeField<T>)],
    background: &RadialMetric<T>,
    grid: &Grid<T>,
) -> Result<MonotonicityResidual<T>> {
    if series.len() < 3 {
        return Err(Error::InsufficientSeries {
            needed: 3,
            found: series.len(),
        });
    }
    let mut times = Vec::with_capacity(series.len());
    let mut renvol = Vec::with_capacity(series.len());
    let mut defect = Vec::with_capacity(series.len());
    let mut flux = Vec::with_capacity(series.len());
    for (t, metric, gauge) in series {
        times.push(*t);
        renvol.push(volume_difference(metric, background, grid)?);
        defect.push(scalar_defect_integral(metric, grid)?);
        flux.push(boundary_flux(metric, gauge, grid)?);
    }
    identity_residual(&times, &renvol, &defect, &flux)
}
