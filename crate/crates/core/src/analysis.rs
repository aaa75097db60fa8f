//! Post-processing of runs: decay fits, curvature floor, weighted norms and
//! the rigidity probe.

use crate::curvature::curvature;
use crate::error::{Error, Result};
use crate::flow::{FlowState, TimeSeries};
use crate::gauge::{boundary_layer, pullback, GaugeField};
use crate::grid::Grid;
use crate::metric::{perturbation, perturbation_norm_at, RadialMetric};
use crate::scalar::Real;

/// Minimum number of samples accepted by [`fit_decay_rate`].
pub const MIN_FIT_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport<T> {
    /// Negated slope of `log norm` against `t`. Not clamped: a growing
    /// series yields a negative value.
    pub kappa_hat: T,
    /// Coefficient of determination of the fit.
    pub fit_quality: T,
    pub window: (T, T),
    /// `(n-1)^2/4`, for comparison only.
    pub lambda_reference: T,
    pub samples: usize,
}

impl<T: Real> DecayReport<T> {
    pub fn ratio_to_reference(&self) -> T {
        self.kappa_hat / self.lambda_reference
    }
}

/// `(n-1)^2 / 4`.
pub fn lambda_reference<T: Real>(n: usize) -> T {
    let m = T::from_usize_lossy(n - 1);
    m * m / T::lit(4.0)
}

/// Least-squares fit of `log norm` against `t` over `window`; by default the
/// second half of the time span.
pub fn fit_decay_rate<T: Real>(
    series: &[(T, T)],
    window: Option<(T, T)>,
    n: usize,
) -> Result<DecayReport<T>> {
    let window = match window {
        Some(w) => w,
        None => {
            let (first, last) = match (series.first(), series.last()) {
                (Some(a), Some(b)) => (a.0, b.0),
                _ => {
                    return Err(Error::WindowTooSmall {
                        needed: MIN_FIT_SAMPLES,
                        found: 0,
                    })
                }
            };
            (first + (last - first) / T::lit(2.0), last)
        }
    };
    let mut points = Vec::new();
    for (index, &(t, v)) in series.iter().enumerate() {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > T::zero()) {
            return Err(Error::NonPositiveNorm { index });
        }
        points.push((t, v.ln()));
    }
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::WindowTooSmall {
            needed: MIN_FIT_SAMPLES,
            found: points.len(),
        });
    }
    let count = T::from_usize_lossy(points.len());
    let mean_t = points.iter().map(|p| p.0).sum::<T>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<T>() / count;
    let stt: T = points.iter().map(|p| (p.0 - mean_t) * (p.0 - mean_t)).sum();
    let sty: T = points.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let syy: T = points.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let slope = if stt > T::zero() {
        sty / stt
    } else {
        T::zero()
    };
    let ss_res: T = points
        .iter()
        .map(|p| {
            let r = p.1 - (mean_y + slope * (p.0 - mean_t));
            r * r
        })
        .sum();
    let fit_quality = if syy > T::zero() {
        (T::one() - ss_res / syy).max(T::zero())
    } else {
        T::one()
    };
    Ok(DecayReport {
        kappa_hat: -slope,
        fit_quality,
        window,
        lambda_reference: lambda_reference(n),
        samples: points.len(),
    })
}

pub(crate) fn curvature_floor<T: Real>(scalar_defect: &[T]) -> T {
    scalar_defect
        .iter()
        .fold(T::infinity(), |acc, &v| acc.min(v))
}

/// `min (R + n(n-1))` over the grid.
pub fn curvature_floor_monitor<T: Real>(state: &FlowState<T>, grid: &Grid<T>) -> Result<T> {
    Ok(curvature_floor(
        &curvature(&state.metric, grid)?.scalar_defect,
    ))
}

/// Open interval of admissible weight exponents `delta`.
pub fn admissible_delta<T: Real>(n: usize) -> (T, T) {
    let m = T::from_usize_lossy(n - 1);
    let root = (m * m + T::lit(4.0) * m).sqrt();
    (m, (m + root) / T::lit(2.0))
}

/// Open interval of admissible `gamma`; `None` for `n < 4`.
pub fn admissible_gamma<T: Real>(n: usize) -> Option<(T, T)> {
    let m = T::from_usize_lossy(n - 1);
    let disc = m * m / T::lit(4.0) - T::lit(2.0);
    if !(disc > T::zero()) {
        return None;
    }
    let half = m / T::lit(2.0);
    Some((half - disc.sqrt(), half + disc.sqrt()))
}

fn check_open(name: &'static str, value: f64, interval: (f64, f64)) -> Result<()> {
    if value > interval.0 && value < interval.1 {
        Ok(())
    } else {
        Err(Error::InadmissibleExponent {
            name,
            value,
            lower: interval.0,
            upper: interval.1,
        })
    }
}

/// Validates `delta` and `gamma` against their admissible intervals.
pub fn check_exponents<T: Real>(n: usize, delta: T, gamma: T) -> Result<()> {
    let (lo, hi) = admissible_delta::<T>(n);
    check_open("delta", delta.as_f64(), (lo.as_f64(), hi.as_f64()))?;
    match admissible_gamma::<T>(n) {
        Some((lo, hi)) => check_open("gamma", gamma.as_f64(), (lo.as_f64(), hi.as_f64())),
        None => Err(Error::InadmissibleExponent {
            name: "gamma",
            value: gamma.as_f64(),
            lower: f64::NAN,
            upper: f64::NAN,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNorms<T> {
    /// `sup e^{delta rho} |u|`.
    pub u: T,
    /// `sup e^{delta rho} |V|`.
    pub v: T,
    /// `sup e^{delta rho} |R + n(n-1)|`.
    pub defect: T,
    /// `sup e^{gamma rho} |u|`.
    pub u_gamma: T,
}

/// Weighted sup norms of `u`, `V` and the scalar defect at `state`.
pub fn weighted_decay_check<T: Real>(
    state: &FlowState<T>,
    gauge: &GaugeField<T>,
    params: (T, T),
    background: &RadialMetric<T>,
    grid: &Grid<T>,
) -> Result<WeightedNorms<T>> {
    let (delta, gamma) = params;
    check_exponents(grid.dim(), delta, gamma)?;
    grid.check_len(gauge.v_rho.len())?;
    let pert = perturbation(&state.metric, background, grid, delta)?;
    let curv = curvature(&state.metric, grid)?;
    let mut out = WeightedNorms {
        u: pert.weighted_sup,
        v: T::zero(),
        defect: T::zero(),
        u_gamma: T::zero(),
    };
    for i in 0..grid.len() {
        let w = grid.weight(i, delta);
        let v = gauge.v_rho[i].abs() * (-T::lit(0.5) * background.log_a()[i]).exp();
        out.v = out.v.max(v * w);
        out.defect = out.defect.max(curv.scalar_defect[i].abs() * w);
        out.u_gamma = out.u_gamma.max(pert.pointwise[i] * grid.weight(i, gamma));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidityTolerances<T> {
    pub renvol: T,
    pub defect: T,
    pub pullback: T,
}

impl<T: Real> Default for RigidityTolerances<T> {
    fn default() -> Self {
        Self {
            renvol: T::lit(1e-6),
            defect: T::lit(1e-5),
            pullback: T::lit(1e-4),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidityVerdict<T> {
    pub renvol_zero: bool,
    pub defect_zero: bool,
    pub pullback_match: bool,
    pub verdict: bool,
    pub max_renvol: T,
    pub max_defect: T,
    pub pullback_error: T,
}

/// Evaluates whether a completed run acted on its initial data only by
/// diffeomorphisms.
pub fn rigidity_probe<T: Real>(
    series: &TimeSeries<T>,
    grid: &Grid<T>,
    tolerances: &RigidityTolerances<T>,
) -> Result<RigidityVerdict<T>> {
    if series.termination.is_halted() {
        return Err(Error::IncompleteRun);
    }
    let (first, last) = match (series.snapshots.first(), series.snapshots.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::MissingSnapshots),
    };
    let max_renvol = series
        .records
        .iter()
        .fold(T::zero(), |acc, r| acc.max(r.renvol.abs()));
    // Pinning the metric at both ends is not compatible with a pure gauge
    // motion, so the pointwise checks skip the same boundary layer that the
    // flow residual excludes.
    let layer = boundary_layer(grid);
    let mut max_defect = T::zero();
    for snap in &series.snapshots {
        let c = curvature(&snap.metric, grid)?;
        max_defect = c.scalar_defect[layer..grid.len() - layer]
            .iter()
            .fold(max_defect, |acc, &v| acc.max(v.abs()));
    }
    let pulled = pullback(&last.metric, &last.map, grid)?;
    let pullback_error = (layer..grid.len() - layer).fold(T::zero(), |acc, i| {
        acc.max(perturbation_norm_at(&pulled, &first.metric, grid, i))
    });
    let renvol_zero = max_renvol <= tolerances.renvol;
    let defect_zero = max_defect <= tolerances.defect;
    let pullback_match = pullback_error <= tolerances.pullback;
    Ok(RigidityVerdict {
        renvol_zero,
        defect_zero,
        pullback_match,
        verdict: renvol_zero && defect_zero && pullback_match,
        max_renvol,
        max_defect,
        pullback_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_fit() {
        let series: Vec<(f64, f64)> = (0..40)
            .map(|k| {
                let t = k as f64 * 0.25;
                (t, 3.0 * (-2.0 * t).exp())
            })
            .collect();
        let r = fit_decay_rate(&series, None, 4).unwrap();
        assert!((r.kappa_hat - 2.0).abs() < 1e-9);
        assert!((r.fit_quality - 1.0).abs() < 1e-12);
        assert_eq!(r.lambda_reference, 2.25);
        let scaled: Vec<_> = series.iter().map(|&(t, v)| (t, 7.0 * v)).collect();
        let s = fit_decay_rate(&scaled, None, 4).unwrap();
        assert!((s.kappa_hat - r.kappa_hat).abs() < 1e-12);
    }

    #[test]
    fn constant_and_error_cases() {
        let constant: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 0.5)).collect();
        let r = fit_decay_rate(&constant, None, 4).unwrap();
        assert_eq!(r.kappa_hat, 0.0);
        let mut bad = constant.clone();
        bad[8].1 = 0.0;
        assert!(matches!(
            fit_decay_rate(&bad, None, 4),
            Err(Error::NonPositiveNorm { index: 8 })
        ));
        assert!(matches!(
            fit_decay_rate(&constant[..4], Some((0.0, 10.0)), 4),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn exponent_intervals() {
        let (lo, hi) = admissible_delta::<f64>(4);
        assert_eq!(lo, 3.0);
        assert!((hi - (3.0 + 21f64.sqrt()) / 2.0).abs() < 1e-15);
        assert_eq!(admissible_gamma::<f64>(4), Some((1.0, 2.0)));
        assert!(admissible_gamma::<f64>(3).is_none());
        assert!(check_exponents(4, 3.4, 1.5).is_ok());
        assert!(matches!(
            check_exponents(4, 5.0, 1.5),
            Err(Error::InadmissibleExponent { name: "delta", .. })
        ));
        assert!(matches!(
            check_exponents(4, 3.4, 2.5),
            Err(Error::InadmissibleExponent { name: "gamma", .. })
        ));
    }
}
