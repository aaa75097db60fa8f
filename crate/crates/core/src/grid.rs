//! Radial computational domain of the ball model.

use crate::error::{Error, Result};
use crate::scalar::{ln_sinh, Real};
use crate::stencil::MIN_POINTS;

/// Smallest accepted number of grid points.
pub const MIN_GRID_POINTS: usize = 16;

/// Uniform grid in the geodesic polar coordinate `rho` together with the
/// dimension of the manifold and the radius of the essential set.
///
/// The hyperbolic profile `coth`, `1/sinh^2` and `ln sinh` is cached per
/// point; every metric in the crate is stored relative to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    n: usize,
    rho_min: T,
    rho_max: T,
    rho_d: T,
    spacing: T,
    rho: Vec<T>,
    coth: Vec<T>,
    csch2: Vec<T>,
    ln_sinh: Vec<T>,
}

impl<T: Real> Grid<T> {
    pub fn new(n: usize, rho_min: T, rho_max: T, num_points: usize, rho_d: T) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!(
                "dimension n = {n} must be >= 3"
            )));
        }
        if num_points < MIN_GRID_POINTS.max(MIN_POINTS) {
            return Err(Error::InvalidGrid(format!(
                "num_points = {num_points} must be >= {MIN_GRID_POINTS}"
            )));
        }
        if !(rho_min > T::zero()) {
            return Err(Error::InvalidGrid(format!(
                "rho_min = {rho_min} must be > 0"
            )));
        }
        if !(rho_min < rho_d && rho_d < rho_max) {
            return Err(Error::InvalidGrid(format!(
                "need rho_min < rho_D < rho_max, got {rho_min} < {rho_d} < {rho_max}"
            )));
        }
        let spacing = (rho_max - rho_min) / T::from_usize_lossy(num_points - 1);
        let rho: Vec<T> = (0..num_points)
            .map(|i| {
                if i == num_points - 1 {
                    rho_max
                } else {
                    rho_min + spacing * T::from_usize_lossy(i)
                }
            })
            .collect();
        let ln_sinh: Vec<T> = rho.iter().map(|&r| ln_sinh(r)).collect();
        let coth = rho.iter().map(|&r| T::one() / r.tanh()).collect();
        let csch2 = ln_sinh.iter().map(|&l| (-T::lit(2.0) * l).exp()).collect();
        Ok(Self {
            n,
            rho_min,
            rho_max,
            rho_d,
            spacing,
            rho,
            coth,
            csch2,
            ln_sinh,
        })
    }

    /// Default domain `[0.25, 12]` with essential radius `1`.
    pub fn with_defaults(n: usize, num_points: usize) -> Result<Self> {
        Self::new(n, T::lit(0.25), T::lit(12.0), num_points, T::one())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Dimension of the round sphere factor, `n - 1`.
    pub fn sphere_dim(&self) -> usize {
        self.n - 1
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn rho_min(&self) -> T {
        self.rho_min
    }

    pub fn rho_max(&self) -> T {
        self.rho_max
    }

    pub fn rho_d(&self) -> T {
        self.rho_d
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    pub fn coth(&self) -> &[T] {
        &self.coth
    }

    pub fn csch2(&self) -> &[T] {
        &self.csch2
    }

    pub fn ln_sinh(&self) -> &[T] {
        &self.ln_sinh
    }

    /// Distance to the essential set, `max(rho - rho_D, 0)`.
    pub fn weight_distance(&self, i: usize) -> T {
        (self.rho[i] - self.rho_d).max(T::zero())
    }

    /// Weight `e^{delta * dist}` used by every weighted sup norm.
    pub fn weight(&self, i: usize, delta: T) -> T {
        (delta * self.weight_distance(i)).exp()
    }

    /// `sinh^{n-1}(rho_i)`, the hyperbolic area density of the sphere at `rho_i`.
    pub fn sphere_density(&self, i: usize) -> T {
        (T::from_usize_lossy(self.sphere_dim()) * self.ln_sinh[i]).exp()
    }

    pub fn check_len(&self, found: usize) -> Result<()> {
        if found == self.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: self.len(),
                found,
            })
        }
    }
}
