//! Independent reference computations used by the test suites and by
//! `nrdf-lab check`.
//!
//! The curvature oracle knows nothing about warped products: it takes the
//! metric `A(rho) drho^2 + B(rho) g_S` as a full diagonal metric in
//! hyperspherical coordinates `(rho, theta_1, ..., theta_m)`, differentiates
//! it numerically, assembles the Riemann tensor from the Christoffel symbols
//! and contracts. Everything is f64.

/// Step of the nested central differences.
pub const ORACLE_STEP: f64 = 1e-3;

/// Angles at which the sphere factors are evaluated; away from the poles.
const THETA: f64 = 1.1;

/// Curvature quantities at one radius, in the conventions of
/// [`crate::CurvatureData`] (sphere components per unit round metric).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCurvature {
    pub gamma_rrr: f64,
    pub gamma_rtt: f64,
    pub gamma_trt: f64,
    pub ric_rr: f64,
    pub ric_tt: f64,
    pub scalar: f64,
}

/// Diagonal metric in hyperspherical coordinates.
struct DiagonalMetric<'a> {
    dim: usize,
    a: &'a dyn Fn(f64) -> f64,
    b: &'a dyn Fn(f64) -> f64,
}

impl DiagonalMetric<'_> {
    fn diag(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        g[0] = (self.a)(x[0]);
        let mut factor = (self.b)(x[0]);
        for k in 1..self.dim {
            g[k] = factor;
            factor *= x[k].sin().powi(2);
        }
        g
    }

    /// `Gamma^l_{ij}` at `x`, indexed `[l][i][j]`.
    fn christoffel(&self, x: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let d = self.dim;
        let g = self.diag(x);
        let dg: Vec<Vec<f64>> = (0..d).map(|k| central(|y| self.diag(y), x, k)).collect();
        // dg[k][l] = d_k g_ll
        let mut gamma = vec![vec![vec![0.0; d]; d]; d];
        for l in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    if l == j {
                        s += dg[i][l];
                    }
                    if l == i {
                        s += dg[j][l];
                    }
                    if i == j {
                        s -= dg[l][i];
                    }
                    gamma[l][i][j] = 0.5 * s / g[l];
                }
            }
        }
        gamma
    }

    /// `R^l_{ijk}` with `Ric_ik = R^l_{ilk}`, indexed `[l][i][j][k]`.
    fn riemann(&self, x: &[f64]) -> Vec<Vec<Vec<Vec<f64>>>> {
        let d = self.dim;
        let gamma = self.christoffel(x);
        let flat = |y: &[f64]| -> Vec<f64> {
            self.christoffel(y)
                .into_iter()
                .flatten()
                .flatten()
                .collect()
        };
        // dgamma[j][(l*d + i)*d + k] = d_j Gamma^l_{ik}
        let dgamma: Vec<Vec<f64>> = (0..d).map(|j| central(flat, x, j)).collect();
        let at = |j: usize, l: usize, i: usize, k: usize| dgamma[j][(l * d + i) * d + k];
        let mut r = vec![vec![vec![vec![0.0; d]; d]; d]; d];
        for l in 0..d {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let mut s = at(j, l, k, i) - at(k, l, j, i);
                        for (p, gp) in gamma.iter().enumerate() {
                            s += gamma[l][j][p] * gp[k][i] - gamma[l][k][p] * gp[j][i];
                        }
                        r[l][i][j][k] = s;
                    }
                }
            }
        }
        r
    }
}

/// Fourth-order central difference of a vector-valued `f` along coordinate `k`.
fn central<F: Fn(&[f64]) -> Vec<f64>>(f: F, x: &[f64], k: usize) -> Vec<f64> {
    let h = ORACLE_STEP;
    let eval = |s: f64| {
        let mut y = x.to_vec();
        y[k] += s * h;
        f(&y)
    };
    let (m2, m1, p1, p2) = (eval(-2.0), eval(-1.0), eval(1.0), eval(2.0));
    (0..m1.len())
        .map(|q| (m2[q] - 8.0 * m1[q] + 8.0 * p1[q] - p2[q]) / (12.0 * h))
        .collect()
}

/// Brute-force curvature of `a(rho) drho^2 + b(rho) g_S` in dimension `n`.
pub fn curvature_oracle(
    n: usize,
    a: &dyn Fn(f64) -> f64,
    b: &dyn Fn(f64) -> f64,
    rho: f64,
) -> OracleCurvature {
    let metric = DiagonalMetric { dim: n, a, b };
    let mut x = vec![THETA; n];
    x[0] = rho;
    let g = metric.diag(&x);
    let gamma = metric.christoffel(&x);
    let riem = metric.riemann(&x);
    let ricci = |i: usize, k: usize| (0..n).map(|l| riem[l][i][l][k]).sum::<f64>();
    let ric: Vec<f64> = (0..n).map(|i| ricci(i, i)).collect();
    let scalar = (0..n).map(|i| ric[i] / g[i]).sum();
    // The first sphere coordinate has unit round-metric coefficient.
    OracleCurvature {
        gamma_rrr: gamma[0][0][0],
        gamma_rtt: gamma[0][1][1],
        gamma_trt: gamma[1][0][1],
        ric_rr: ric[0],
        ric_tt: ric[1],
        scalar,
    }
}

/// `|x - y| / max(|y|, 1)`.
pub fn relative_error(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(1.0)
}

/// Composite Simpson rule for `f` on `[lo, hi]` with `intervals` (rounded up to even) pieces.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let n = intervals.max(2) + intervals % 2;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + k as f64 * h);
    }
    s * h / 3.0
}

/// `max |f|` over `samples` equally spaced points of `[lo, hi]`.
pub fn dense_sup(f: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> f64 {
    let last = samples.max(2) - 1;
    (0..=last)
        .map(|k| f(lo + (hi - lo) * k as f64 / last as f64).abs())
        .fold(0.0, f64::max)
}
