//! Levi-Civita connection and Ricci curvature of a warped-product metric.
//!
//! With `P = B'/B = 2 coth rho + log_b'`, the Ricci tensor of
//! `A drho^2 + B g_S` is evaluated as the Einstein defects
//!
//! ```text
//! E_rho   = Ric_rhorho / A + (n-1)
//! E_theta = Ric_thetatheta / B + (n-1)
//! ```
//!
//! which vanish identically on the hyperbolic metric. The expressions below
//! expand `B''/B` and `P^2` around `2 + 2 coth^2` and `4 coth^2` so that the
//! constant background part cancels symbolically rather than in floating point.

use crate::error::Result;
use crate::grid::Grid;
use crate::metric::{Jet, RadialMetric};
use crate::scalar::Real;

/// The independent Christoffel symbols of the ansatz; `theta` is any sphere
/// direction and `rtt` is per unit round metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection<T> {
    pub gamma_rrr: Vec<T>,
    pub gamma_rtt: Vec<T>,
    pub gamma_trt: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData<T> {
    pub connection: Connection<T>,
    pub ric_rr: Vec<T>,
    /// Sphere-block Ricci eigencomponent per unit round metric.
    pub ric_tt: Vec<T>,
    pub scalar: Vec<T>,
    /// `Ric_rhorho / A + (n-1)`.
    pub einstein_defect_rr: Vec<T>,
    /// `Ric_thetatheta / B + (n-1)`.
    pub einstein_defect_tt: Vec<T>,
    /// `R + n(n-1)`, computed without cancellation against the constant.
    pub scalar_defect: Vec<T>,
}

/// Inputs at a single grid point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointJet<T> {
    pub coth: T,
    pub csch2: T,
    pub alpha: T,
    pub beta: T,
    pub d_alpha: T,
    pub d_beta: T,
    pub dd_alpha: T,
    pub dd_beta: T,
}

impl<T: Real> PointJet<T> {
    pub fn at(jet: &Jet<T>, grid: &Grid<T>, i: usize) -> Self {
        Self {
            coth: grid.coth()[i],
            csch2: grid.csch2()[i],
            alpha: jet.alpha[i],
            beta: jet.beta[i],
            d_alpha: jet.d_alpha[i],
            d_beta: jet.d_beta[i],
            dd_alpha: jet.dd_alpha[i],
            dd_beta: jet.dd_beta[i],
        }
    }

    /// `B'/B`.
    pub fn log_b_slope(&self) -> T {
        T::lit(2.0) * self.coth + self.d_beta
    }

    /// Returns `(E_rho, E_theta)` for sphere dimension `m`.
    pub fn einstein_defects(&self, m: usize) -> (T, T) {
        let m_t = T::from_usize_lossy(m);
        let (two, four) = (T::lit(2.0), T::lit(4.0));
        let c = self.coth;
        let db = self.d_beta;
        let p = self.log_b_slope();
        let inv_a = (-self.alpha).exp();
        let em1_a = (-self.alpha).exp_m1();
        let em1_b = (-self.beta).exp_m1();
        // B''/B - (2 + 2c^2) and P^2 - 4c^2.
        let q_dev = self.dd_beta + four * c * db + db * db;
        let p2_dev = four * c * db + db * db;
        let cross = self.d_alpha * p / four;

        let y_dev = self.dd_beta / two + c * db + db * db / four - cross;
        let e_rho = -m_t * (em1_a + inv_a * y_dev);

        let z0 = -T::one() - (m_t - T::one()) * c * c;
        let z_dev = -q_dev / two + cross - (m_t - two) * p2_dev / four;
        let e_theta = (m_t - T::one()) * self.csch2 * em1_b + em1_a * z0 + inv_a * z_dev;
        (e_rho, e_theta)
    }
}

/// Christoffel symbols `A'/2A`, `-B'/2A` and `B'/2B`.
pub fn christoffel<T: Real>(metric: &RadialMetric<T>, grid: &Grid<T>) -> Result<Connection<T>> {
    let jet = Jet::of(metric, grid)?;
    Ok(connection_from_jet(&jet, metric, grid))
}

fn connection_from_jet<T: Real>(
    jet: &Jet<T>,
    metric: &RadialMetric<T>,
    grid: &Grid<T>,
) -> Connection<T> {
    let half = T::lit(0.5);
    let n = grid.len();
    let mut connection = Connection {
        gamma_rrr: Vec::with_capacity(n),
        gamma_rtt: Vec::with_capacity(n),
        gamma_trt: Vec::with_capacity(n),
    };
    for i in 0..n {
        let p = PointJet::at(jet, grid, i).log_b_slope();
        connection.gamma_rrr.push(half * jet.d_alpha[i]);
        connection.gamma_trt.push(half * p);
        connection
            .gamma_rtt
            .push(-half * p * metric.b(grid, i) / metric.a(i));
    }
    connection
}

/// Connection, Ricci components and scalar curvature.
pub fn curvature<T: Real>(metric: &RadialMetric<T>, grid: &Grid<T>) -> Result<CurvatureData<T>> {
    let jet = Jet::of(metric, grid)?;
    Ok(curvature_from_jet(&jet, metric, grid))
}

pub(crate) fn curvature_from_jet<T: Real>(
    jet: &Jet<T>,
    metric: &RadialMetric<T>,
    grid: &Grid<T>,
) -> CurvatureData<T> {
    let m = grid.sphere_dim();
    let m_t = T::from_usize_lossy(m);
    let n = grid.len();
    let connection = connection_from_jet(jet, metric, grid);
    let mut data = CurvatureData {
        connection,
        ric_rr: Vec::with_capacity(n),
        ric_tt: Vec::with_capacity(n),
        scalar: Vec::with_capacity(n),
        einstein_defect_rr: Vec::with_capacity(n),
        einstein_defect_tt: Vec::with_capacity(n),
        scalar_defect: Vec::with_capacity(n),
    };
    for i in 0..n {
        let (e_rho, e_theta) = PointJet::at(jet, grid, i).einstein_defects(m);
        let a = metric.a(i);
        let b = metric.b(grid, i);
        let ric_rr = a * (e_rho - m_t);
        let ric_tt = b * (e_theta - m_t);
        let defect = e_rho + m_t * e_theta;
        data.ric_rr.push(ric_rr);
        data.ric_tt.push(ric_tt);
        data.scalar.push(ric_rr / a + m_t * ric_tt / b);
        data.einstein_defect_rr.push(e_rho);
        data.einstein_defect_tt.push(e_theta);
        data.scalar_defect.push(defect);
    }
    data
}

/// `R + n(n-1)` at every grid point.
pub fn scalar_defect<T: Real>(metric: &RadialMetric<T>, grid: &Grid<T>) -> Result<Vec<T>> {
    Ok(curvature(metric, grid)?.scalar_defect)
}
