//! DeTurck one-form, the gauge diffeomorphism and pullbacks.

use crate::curvature::PointJet;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::metric::{Jet, RadialMetric};
use crate::scalar::Real;
use crate::stencil::{cubic_interpolate, d1};

/// The DeTurck one-form `V_j = g_jk g^pq (Gamma^k_pq - Gamma~^k_pq)`.
///
/// Only `V_rho` is stored: the sphere components vanish structurally because
/// the round-sphere Christoffel symbols of `g` and `g~` coincide and
/// `g^pq` has no mixed radial-sphere entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeField<T> {
    pub v_rho: Vec<T>,
    /// Radial derivative of `V_rho`.
    pub dv_rho: Vec<T>,
    /// Contravariant component `V^rho = V_rho / A`.
    pub v_up: Vec<T>,
    pub sup_norm: T,
    pub weighted_sup: T,
}

impl<T: Real> GaugeField<T> {
    /// Sphere components of `V`; identically zero in the ansatz.
    pub fn v_sphere(&self) -> T {
        T::zero()
    }
}

/// `V_rho` and its radial derivative at one point.
pub(crate) fn deturck_at<T: Real>(m: usize, point: &PointJet<T>, bg: &PointJet<T>) -> (T, T) {
    let m_t = T::from_usize_lossy(m);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mismatch = (point.alpha - bg.alpha) - (point.beta - bg.beta);
    let d_mismatch = (point.d_alpha - bg.d_alpha) - (point.d_beta - bg.d_beta);
    let p_bg = bg.log_b_slope();
    let dp_bg = -two * bg.csch2 + bg.dd_beta;
    let em1 = mismatch.exp_m1();
    let v = half * (point.d_alpha - bg.d_alpha) - half * m_t * (point.d_beta - bg.d_beta)
        + half * m_t * p_bg * em1;
    let dv = half * (point.dd_alpha - bg.dd_alpha) - half * m_t * (point.dd_beta - bg.dd_beta)
        + half * m_t * (dp_bg * em1 + p_bg * mismatch.exp() * d_mismatch);
    (v, dv)
}

pub(crate) fn gauge_from_jets<T: Real>(
    jet: &Jet<T>,
    bg_jet: &Jet<T>,
    grid: &Grid<T>,
    delta: T,
) -> GaugeField<T> {
    let n = grid.len();
    let m = grid.sphere_dim();
    let mut field = GaugeField {
        v_rho: Vec::with_capacity(n),
        dv_rho: Vec::with_capacity(n),
        v_up: Vec::with_capacity(n),
        sup_norm: T::zero(),
        weighted_sup: T::zero(),
    };
    for i in 0..n {
        let point = PointJet::at(jet, grid, i);
        let bg = PointJet::at(bg_jet, grid, i);
        let (v, dv) = deturck_at(m, &point, &bg);
        field.v_rho.push(v);
        field.dv_rho.push(dv);
        field.v_up.push(v * (-jet.alpha[i]).exp());
        let norm = v.abs() * (-T::lit(0.5) * bg_jet.alpha[i]).exp();
        field.sup_norm = field.sup_norm.max(norm);
        field.weighted_sup = field.weighted_sup.max(norm * grid.weight(i, delta));
    }
    field
}

/// Evaluates the DeTurck one-form of `metric` relative to `background`.
pub fn deturck_vector<T: Real>(
    metric: &RadialMetric<T>,
    background: &RadialMetric<T>,
    grid: &Grid<T>,
    delta: T,
) -> Result<GaugeField<T>> {
    let jet = Jet::of(metric, grid)?;
    let bg_jet = Jet::of(background, grid)?;
    Ok(gauge_from_jets(&jet, &bg_jet, grid, delta))
}

/// Radial profile `phi(rho)` of a rotationally symmetric diffeomorphism,
/// sampled on the grid and interpolated cubically in between.
///
/// The displacement `phi - rho` is stored instead of `phi`: the gauge drift
/// is tiny compared with `rho`, and rounding `phi` itself at every step would
/// swamp the third derivatives that a pullback needs.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffeoMap<T> {
    shift: Vec<T>,
}

impl<T: Real> DiffeoMap<T> {
    pub fn identity(grid: &Grid<T>) -> Self {
        Self {
            shift: vec![T::zero(); grid.len()],
        }
    }

    /// Samples `phi = f(rho)`; the two ends are forced back onto the grid ends.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::from_shift(grid, grid.rho().iter().map(|&r| f(r) - r).collect())
    }

    /// Builds the map from the displacement `phi - rho`.
    pub fn from_shift(grid: &Grid<T>, mut shift: Vec<T>) -> Result<Self> {
        grid.check_len(shift.len())?;
        let n = shift.len();
        shift[0] = T::zero();
        shift[n - 1] = T::zero();
        let map = Self { shift };
        map.validate(grid)?;
        Ok(map)
    }

    pub fn shift(&self) -> &[T] {
        &self.shift
    }

    /// `phi` at every grid point.
    pub fn phi(&self, grid: &Grid<T>) -> Vec<T> {
        self.shift
            .iter()
            .zip(grid.rho())
            .map(|(&s, &r)| r + s)
            .collect()
    }

    /// Strict monotonicity on the grid.
    pub fn validate(&self, grid: &Grid<T>) -> Result<()> {
        grid.check_len(self.shift.len())?;
        let h = grid.spacing();
        for i in 1..self.shift.len() {
            if !(h + self.shift[i] - self.shift[i - 1] > T::zero()) {
                return Err(Error::MonotonicityLost { index: i });
            }
        }
        Ok(())
    }

    /// `phi(x)` off the grid.
    pub fn at(&self, grid: &Grid<T>, x: T) -> T {
        x + cubic_interpolate(&self.shift, grid.rho_min(), grid.spacing(), x)
    }

    /// `sup |phi(rho) - rho|`.
    pub fn drift(&self) -> T {
        self.shift
            .iter()
            .fold(T::zero(), |acc, &s| acc.max(s.abs()))
    }

    /// Inverse profile, solved pointwise by bisection on the cubic interpolant.
    pub fn invert(&self, grid: &Grid<T>) -> Result<Self> {
        self.validate(grid)?;
        let tol = T::lit(1e-12);
        let n = grid.len();
        let phi = self.phi(grid);
        let mut shift = Vec::with_capacity(n);
        for (i, &target) in grid.rho().iter().enumerate() {
            if i == 0 || i == n - 1 {
                shift.push(T::zero());
                continue;
            }
            // phi is increasing, so the bracket comes from the grid samples.
            let k = phi.partition_point(|&p| p < target);
            let mut lo = grid.rho()[k.saturating_sub(1)];
            let mut hi = grid.rho()[k.min(n - 1)];
            let mut guard = 0;
            while hi - lo > tol && guard < 200 {
                let mid = (lo + hi) / T::lit(2.0);
                if self.at(grid, mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                guard += 1;
            }
            shift.push((lo + hi) / T::lit(2.0) - target);
        }
        Self::from_shift(grid, shift)
    }
}

fn interpolate_field<T: Real>(grid: &Grid<T>, field: &[T], x: T) -> T {
    cubic_interpolate(field, grid.rho_min(), grid.spacing(), x)
}

/// Velocity `-V^rho(phi)` of the displacement at the interior points; the
/// two ends stay fixed.
pub(crate) fn map_velocity<T: Real>(grid: &Grid<T>, v_up: &[T], shift: &[T], out: &mut [T]) {
    let n = shift.len();
    out[0] = T::zero();
    out[n - 1] = T::zero();
    for i in 1..n - 1 {
        out[i] = -interpolate_field(grid, v_up, grid.rho()[i] + shift[i]);
    }
}

/// One RK4 step of `d phi / dt = -V^rho(phi)` with the field frozen over the step.
pub fn advance_diffeo<T: Real>(
    map: &DiffeoMap<T>,
    field: &GaugeField<T>,
    grid: &Grid<T>,
    dt: T,
) -> Result<DiffeoMap<T>> {
    map.validate(grid)?;
    grid.check_len(field.v_up.len())?;
    let n = grid.len();
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let mut k = [
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
    ];
    map_velocity(grid, &field.v_up, &map.shift, &mut k[0]);
    let stage = |scale: T, dir: &[T]| -> Vec<T> {
        map.shift
            .iter()
            .zip(dir)
            .map(|(&p, &d)| p + scale * d)
            .collect()
    };
    let s1 = stage(dt / two, &k[0]);
    map_velocity(grid, &field.v_up, &s1, &mut k[1]);
    let s2 = stage(dt / two, &k[1]);
    map_velocity(grid, &field.v_up, &s2, &mut k[2]);
    let s3 = stage(dt, &k[2]);
    map_velocity(grid, &field.v_up, &s3, &mut k[3]);
    let shift = (0..n)
        .map(|i| map.shift[i] + dt / six * (k[0][i] + two * k[1][i] + two * k[2][i] + k[3][i]))
        .collect();
    let next = DiffeoMap { shift };
    next.validate(grid)?;
    Ok(next)
}

/// `ln(sinh(rho + d) / sinh(rho))` without cancellation for small `d`.
fn ln_sinh_ratio<T: Real>(coth_rho: T, d: T) -> T {
    let two = T::lit(2.0);
    let half_sinh = (d / two).sinh();
    (two * half_sinh * half_sinh + coth_rho * d.sinh()).ln_1p()
}

/// Pullback `Phi^* g`: `A*(rho) = A(phi) phi'^2` and `B*(rho) = B(phi)`.
pub fn pullback<T: Real>(
    metric: &RadialMetric<T>,
    map: &DiffeoMap<T>,
    grid: &Grid<T>,
) -> Result<RadialMetric<T>> {
    metric.validate(grid)?;
    map.validate(grid)?;
    let n = grid.len();
    let dshift = d1(&map.shift, grid.spacing());
    let two = T::lit(2.0);
    let mut log_a = Vec::with_capacity(n);
    let mut log_b = Vec::with_capacity(n);
    for i in 0..n {
        if !(T::one() + dshift[i] > T::zero()) {
            return Err(Error::MonotonicityLost { index: i });
        }
        let d = map.shift[i];
        let phi = grid.rho()[i] + d;
        log_a.push(interpolate_field(grid, metric.log_a(), phi) + two * dshift[i].ln_1p());
        log_b.push(
            interpolate_field(grid, metric.log_b(), phi) + two * ln_sinh_ratio(grid.coth()[i], d),
        );
    }
    Ok(RadialMetric::from_logs(log_a, log_b))
}

/// Central-difference residual of `d g/dt = -2(Ric + (n-1) g)` along a series.
#[derive(Debug, Clone, PartialEq)]
pub struct NrfResidual<T> {
    /// Interior sample times at which the residual was evaluated.
    pub times: Vec<T>,
    /// Sup over the grid interior of the `g`-frame norm of the residual.
    pub per_time: Vec<T>,
    pub max: T,
}

/// Width in `rho` excluded at each end when measuring flow residuals of
/// pulled-back metrics: the map is pinned at the ends, so the pullback is
/// not smooth in a thin layer there. A fixed width rather than a fixed point
/// count keeps the excluded region the same under refinement.
pub const PULLBACK_BOUNDARY_WIDTH: f64 = 0.15;

/// Residual of the normalized Ricci flow along `series` (time, metric).
pub fn nrf_residual<T: Real>(
    series: &[(T, RadialMetric<T>)],
    grid: &Grid<T>,
) -> Result<NrfResidual<T>> {
    nrf_residual_with_layer(series, grid, boundary_layer(grid))
}

/// Number of grid points covered by [`PULLBACK_BOUNDARY_WIDTH`].
pub fn boundary_layer<T: Real>(grid: &Grid<T>) -> usize {
    let layer = (PULLBACK_BOUNDARY_WIDTH / grid.spacing().as_f64()).ceil() as usize;
    layer.max(2).min(grid.len() / 4)
}

pub fn nrf_residual_with_layer<T: Real>(
    series: &[(T, RadialMetric<T>)],
    grid: &Grid<T>,
    layer: usize,
) -> Result<NrfResidual<T>> {
    if series.len() < 3 {
        return Err(Error::InsufficientSeries {
            needed: 3,
            found: series.len(),
        });
    }
    let n = grid.len();
    let m = grid.sphere_dim();
    let m_t = T::from_usize_lossy(m);
    let two = T::lit(2.0);
    let lo = layer.min(n / 2);
    let hi = n.saturating_sub(layer).max(lo);
    let mut out = NrfResidual {
        times: Vec::new(),
        per_time: Vec::new(),
        max: T::zero(),
    };
    for k in 1..series.len() - 1 {
        let (t_prev, prev) = &series[k - 1];
        let (t_mid, mid) = &series[k];
        let (t_next, next) = &series[k + 1];
        let span = *t_next - *t_prev;
        let jet = Jet::of(mid, grid)?;
        let mut worst = T::zero();
        for i in lo..hi {
            let (e_rho, e_theta) = PointJet::at(&jet, grid, i).einstein_defects(m);
            let ra = (next.log_a()[i] - prev.log_a()[i]) / span + two * e_rho;
            let rb = (next.log_b()[i] - prev.log_b()[i]) / span + two * e_theta;
            worst = worst.max((ra * ra + m_t * rb * rb).sqrt());
        }
        out.times.push(*t_mid);
        out.per_time.push(worst);
        out.max = out.max.max(worst);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::curvature;
    use crate::metric::hyperbolic_background;

    fn bump(grid: &Grid<f64>, amp: f64) -> DiffeoMap<f64> {
        let (lo, hi) = (grid.rho_min(), grid.rho_max());
        DiffeoMap::from_fn(grid, |r| {
            let s = ((r - lo) * (hi - r)).max(0.0);
            r + amp * s * s * (-(r - 2.0f64).powi(2)).exp() / 100.0
        })
        .unwrap()
    }

    #[test]
    fn background_has_no_gauge() {
        let g = Grid::<f64>::with_defaults(4, 100).unwrap();
        let h = hyperbolic_background(&g);
        let v = deturck_vector(&h, &h, &g, 3.4).unwrap();
        assert!(v.v_rho.iter().all(|&x| x == 0.0));
        assert_eq!(v.sup_norm, 0.0);
        assert_eq!(v.v_sphere(), 0.0);
    }

    #[test]
    fn zero_field_leaves_map_unchanged() {
        let g = Grid::<f64>::with_defaults(4, 100).unwrap();
        let h = hyperbolic_background(&g);
        let v = deturck_vector(&h, &h, &g, 0.0).unwrap();
        let map = bump(&g, 0.1);
        let next = advance_diffeo(&map, &v, &g, 0.01).unwrap();
        assert_eq!(next, map);
    }

    #[test]
    fn constant_field_translates_interior() {
        let g = Grid::<f64>::with_defaults(4, 100).unwrap();
        let c = 1e-3;
        let field = GaugeField {
            v_rho: vec![c; g.len()],
            dv_rho: vec![0.0; g.len()],
            v_up: vec![c; g.len()],
            sup_norm: c,
            weighted_sup: c,
        };
        let dt = 0.01;
        let next = advance_diffeo(&DiffeoMap::identity(&g), &field, &g, dt).unwrap();
        let phi = next.phi(&g);
        for i in 1..g.len() - 1 {
            assert!((phi[i] - (g.rho()[i] - c * dt)).abs() < 1e-14);
            assert!((next.shift()[i] + c * dt).abs() < 1e-18);
        }
        assert_eq!(phi[0], g.rho_min());
    }

    #[test]
    fn folding_field_is_rejected() {
        let g = Grid::<f64>::with_defaults(4, 100).unwrap();
        let v_up: Vec<f64> = (0..g.len())
            .map(|i| if i % 2 == 0 { 5.0 } else { -5.0 })
            .collect();
        let field = GaugeField {
            v_rho: v_up.clone(),
            dv_rho: vec![0.0; g.len()],
            v_up,
            sup_norm: 5.0,
            weighted_sup: 5.0,
        };
        let err = advance_diffeo(&DiffeoMap::identity(&g), &field, &g, 0.1).unwrap_err();
        assert!(matches!(err, Error::MonotonicityLost { .. }));
    }

    #[test]
    fn identity_pullback_is_trivial() {
        let g = Grid::<f64>::with_defaults(4, 120).unwrap();
        let la: Vec<f64> = g
            .rho()
            .iter()
            .map(|r| 0.01 * (-(r - 3.0f64).powi(2)).exp())
            .collect();
        let metric = RadialMetric::from_logs(la.clone(), la);
        let back = pullback(&metric, &DiffeoMap::identity(&g), &g).unwrap();
        for i in 0..g.len() {
            assert!((back.log_a()[i] - metric.log_a()[i]).abs() < 1e-13);
            assert!((back.log_b()[i] - metric.log_b()[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn pulled_back_hyperbolic_is_einstein() {
        let worst = |points: usize| {
            let g = Grid::<f64>::with_defaults(4, points).unwrap();
            let h = hyperbolic_background(&g);
            let pulled = pullback(&h, &bump(&g, 0.05), &g).unwrap();
            let v = deturck_vector(&pulled, &h, &g, 0.0).unwrap();
            assert!(v.sup_norm > 1e-4);
            let c = curvature(&pulled, &g).unwrap();
            c.scalar_defect.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
        };
        let (coarse, fine) = (worst(800), worst(1600));
        assert!(fine < 5e-5, "defect {fine}");
        assert!(coarse / fine > 6.0, "{coarse} -> {fine}");
    }

    #[test]
    fn constant_series_has_zero_residual() {
        let g = Grid::<f64>::with_defaults(4, 100).unwrap();
        let h = hyperbolic_background(&g);
        let series: Vec<(f64, RadialMetric<f64>)> =
            (0..4).map(|k| (k as f64 * 0.1, h.clone())).collect();
        let r = nrf_residual(&series, &g).unwrap();
        assert!(r.max <= 1e-8);
        assert_eq!(r.per_time.len(), 2);
        assert!(matches!(
            nrf_residual(&series[..2], &g),
            Err(Error::InsufficientSeries { .. })
        ));
    }
}
