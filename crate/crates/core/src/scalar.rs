//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the geometry is computed in: `f32` or `f64`.
///
/// The curvature defects are evaluated in cancellation-free form, so `f32`
/// works for smoke tests, but the published tolerances assume `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count or index.
    #[inline]
    fn from_usize_lossy(k: usize) -> Self {
        Self::from_usize(k).expect("count representable in scalar type")
    }

    /// Lossy conversion used for error payloads and reports.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `ln sinh x` for `x > 0`, finite far beyond the range where `sinh` overflows.
pub fn ln_sinh<T: Real>(x: T) -> T {
    let two = T::lit(2.0);
    x + (-(-two * x).exp()).ln_1p() - two.ln()
}

/// Area of the unit `k`-sphere, `2 pi^{(k+1)/2} / Gamma((k+1)/2)`.
pub fn unit_sphere_area<T: Real>(k: usize) -> T {
    // Gamma at integers and half integers by recurrence.
    let half_dim = k + 1;
    let mut gamma = if half_dim.is_multiple_of(2) {
        T::one()
    } else {
        T::PI().sqrt()
    };
    let mut x = if half_dim.is_multiple_of(2) {
        T::one()
    } else {
        T::lit(0.5)
    };
    let target = T::from_usize_lossy(half_dim) / T::lit(2.0);
    while x < target - T::lit(0.25) {
        gamma = gamma * x;
        x = x + T::one();
    }
    T::lit(2.0) * T::PI().powf(target) / gamma
}
