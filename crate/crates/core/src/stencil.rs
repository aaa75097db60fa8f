//! Fourth-order finite differences, local cubic interpolation and trapezoid
//! quadrature on a uniform grid.

use crate::scalar::Real;

const D1_CENTER: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D1_EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const D1_EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];

const D2_CENTER: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const D2_EDGE0: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
const D2_EDGE1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];

/// Minimum number of samples the boundary stencils need.
pub const MIN_POINTS: usize = 6;

fn apply<T: Real>(coeffs: &[f64], values: &[T], start: usize, reversed: bool) -> T {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let idx = if reversed { start - k } else { start + k };
            T::lit(c) * values[idx]
        })
        .sum()
}

/// First derivative, centered in the interior and one-sided at the two
/// nearest points to each end.
pub fn d1<T: Real>(values: &[T], h: T) -> Vec<T> {
    let n = values.len();
    assert!(
        n >= MIN_POINTS,
        "stencil needs at least {MIN_POINTS} samples"
    );
    let scale = T::one() / (T::lit(12.0) * h);
    let mut out = vec![T::zero(); n];
    out[0] = apply(&D1_EDGE0, values, 0, false) * scale;
    out[1] = apply(&D1_EDGE1, values, 0, false) * scale;
    for i in 2..n - 2 {
        out[i] = apply(&D1_CENTER, values, i - 2, false) * scale;
    }
    // Mirrored stencils flip sign for odd derivatives.
    out[n - 1] = -apply(&D1_EDGE0, values, n - 1, true) * scale;
    out[n - 2] = -apply(&D1_EDGE1, values, n - 1, true) * scale;
    out
}

/// Second derivative with the same layout as [`d1`].
pub fn d2<T: Real>(values: &[T], h: T) -> Vec<T> {
    let n = values.len();
    assert!(
        n >= MIN_POINTS,
        "stencil needs at least {MIN_POINTS} samples"
    );
    let scale = T::one() / (T::lit(12.0) * h * h);
    let mut out = vec![T::zero(); n];
    out[0] = apply(&D2_EDGE0, values, 0, false) * scale;
    out[1] = apply(&D2_EDGE1, values, 0, false) * scale;
    for i in 2..n - 2 {
        out[i] = apply(&D2_CENTER, values, i - 2, false) * scale;
    }
    out[n - 1] = apply(&D2_EDGE0, values, n - 1, true) * scale;
    out[n - 2] = apply(&D2_EDGE1, values, n - 1, true) * scale;
    out
}

/// Composite trapezoid rule.
pub fn trapezoid<T: Real>(values: &[T], h: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let inner: T = values[1..n - 1].iter().copied().sum();
            h * (inner + (values[0] + values[n - 1]) / T::lit(2.0))
        }
    }
}

/// Four-point Lagrange interpolation of samples taken at `x0 + i h`.
///
/// Points outside the sample range are extrapolated from the nearest
/// four-point stencil.
pub fn cubic_interpolate<T: Real>(values: &[T], x0: T, h: T, x: T) -> T {
    let n = values.len();
    assert!(n >= 4, "cubic interpolation needs at least 4 samples");
    let s = (x - x0) / h;
    let cell = s.floor().to_i64().unwrap_or(0);
    let j = cell.clamp(1, n as i64 - 3) as usize;
    let t = s - T::from_usize_lossy(j);
    // Nodes at offsets -1, 0, 1, 2 relative to j.
    let one = T::one();
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let w_m1 = -t * (t - one) * (t - two) / six;
    let w_0 = (t + one) * (t - one) * (t - two) / two;
    let w_1 = -(t + one) * t * (t - two) / two;
    let w_2 = (t + one) * t * (t - one) / six;
    w_m1 * values[j - 1] + w_0 * values[j] + w_1 * values[j + 1] + w_2 * values[j + 2]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(x: f64, degree: i32) -> f64 {
        (0..=degree).map(|k| (k as f64 + 1.0) * x.powi(k)).sum()
    }

    fn dpoly(x: f64, degree: i32) -> f64 {
        (1..=degree)
            .map(|k| (k as f64 + 1.0) * k as f64 * x.powi(k - 1))
            .sum()
    }

    fn ddpoly(x: f64, degree: i32) -> f64 {
        (2..=degree)
            .map(|k| (k as f64 + 1.0) * (k * (k - 1)) as f64 * x.powi(k - 2))
            .sum()
    }

    #[test]
    fn first_derivative_exact_to_degree_four() {
        let h = 0.1;
        let xs: Vec<f64> = (0..12).map(|i| 0.3 + i as f64 * h).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| poly(x, 4)).collect();
        for (x, d) in xs.iter().zip(d1(&ys, h)) {
            assert!((d - dpoly(*x, 4)).abs() < 1e-9, "{x}: {d}");
        }
    }

    #[test]
    fn second_derivative_exact_to_degree_four_everywhere() {
        let h = 0.1;
        let xs: Vec<f64> = (0..12).map(|i| 0.3 + i as f64 * h).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| poly(x, 4)).collect();
        for (x, d) in xs.iter().zip(d2(&ys, h)) {
            assert!((d - ddpoly(*x, 4)).abs() < 1e-7, "{x}: {d}");
        }
        // The one-sided stencils are also exact at degree five.
        let ys: Vec<f64> = xs.iter().map(|&x| poly(x, 5)).collect();
        let d = d2(&ys, h);
        for i in [0, 1, 10, 11] {
            assert!((d[i] - ddpoly(xs[i], 5)).abs() < 1e-6);
        }
    }

    #[test]
    fn derivative_converges_at_fourth_order() {
        let err = |n: usize| {
            let h = 2.0 / (n - 1) as f64;
            let ys: Vec<f64> = (0..n).map(|i| (0.5 + i as f64 * h).sin()).collect();
            d2(&ys, h)
                .iter()
                .enumerate()
                .map(|(i, d)| (d + (0.5 + i as f64 * h).sin()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 14.0, "ratio {ratio}");
    }

    #[test]
    fn cubic_interpolation_reproduces_cubics() {
        let h = 0.25;
        let ys: Vec<f64> = (0..10).map(|i| poly(i as f64 * h, 3)).collect();
        for &x in &[0.0, 0.1, 0.77, 1.3, 2.24, 2.25] {
            let v = cubic_interpolate(&ys, 0.0, h, x);
            assert!((v - poly(x, 3)).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn trapezoid_linear_exact() {
        let h = 0.5;
        let ys: Vec<f64> = (0..5).map(|i| 1.0 + 2.0 * i as f64 * h).collect();
        assert!((trapezoid(&ys, h) - 6.0).abs() < 1e-14);
    }
}
