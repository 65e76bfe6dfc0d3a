//! Scalar special functions and a derivative-free 1-D maximizer.
//!
//! The normal cdf is evaluated through `erfc` so that the lower tail keeps
//! full relative precision; the upper tail is obtained by reflection.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{domain, Result};

/// Tolerances used by the numerical routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub search_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            search_tol: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, search_tol: f64) -> Result<Self> {
        if !(abs_tol > 0.0) || !(search_tol > 0.0) {
            return domain(format!(
                "tolerances must be positive (abs_tol={abs_tol}, search_tol={search_tol})"
            ));
        }
        Ok(Self {
            abs_tol,
            search_tol,
        })
    }
}

/// Standard normal cdf without input validation. `±∞` map to `1`/`0`.
#[inline]
pub(crate) fn phi(y: f64) -> f64 {
    0.5 * libm::erfc(-y * FRAC_1_SQRT_2)
}

/// Upper tail `Q(y) = 1 − Φ(y)`, accurate for large positive `y`.
#[inline]
pub(crate) fn q_tail(y: f64) -> f64 {
    0.5 * libm::erfc(y * FRAC_1_SQRT_2)
}

/// Probability that a standard normal variable falls in `[lo, hi)`.
///
/// Differences are taken on whichever tail keeps both terms small, so cells
/// far in the upper tail do not lose precision to cancellation against 1.
#[inline]
pub(crate) fn interval_prob(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let p = if lo >= 0.0 {
        q_tail(lo) - q_tail(hi)
    } else if hi <= 0.0 {
        phi(hi) - phi(lo)
    } else {
        1.0 - phi(lo) - q_tail(hi)
    };
    p.max(0.0)
}

/// Standard normal cumulative distribution function Φ(y).
pub fn std_normal_cdf(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return domain(format!("std_normal_cdf: non-finite input {y}"));
    }
    Ok(phi(y))
}

/// Gaussian Q-function, `1 − Φ(y)`.
pub fn q_function(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return domain(format!("q_function: non-finite input {y}"));
    }
    Ok(q_tail(y))
}

/// Inverse of the standard normal cdf on the open interval `(0, 1)`.
///
/// Acklam's rational approximation (relative error about 1e-9) followed by
/// one Halley step against [`std_normal_cdf`]. Inputs above one half are
/// reflected, which makes the result exactly antisymmetric.
pub fn std_normal_inv_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("std_normal_inv_cdf: p={p} outside (0, 1)"));
    }
    if p > 0.5 {
        return Ok(-lower_inv_cdf(1.0 - p));
    }
    Ok(lower_inv_cdf(p))
}

// p in (0, 0.5]
fn lower_inv_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.54967101024325e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p == 0.5 {
        return 0.0;
    }
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    // Halley refinement.
    let e = phi(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (√5 − 1) / 2

/// Maximize a concave function on `[lo, hi]` by golden-section search.
///
/// Returns `(argmax, f(argmax))`. The endpoints are compared against the
/// interior optimum at the end, so maxima sitting on the boundary are
/// returned exactly.
pub fn maximize_concave_1d<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return domain(format!(
            "maximize_concave_1d: invalid interval [{lo}, {hi}]"
        ));
    }
    if !(tol > 0.0) {
        return domain(format!("maximize_concave_1d: tol={tol} must be positive"));
    }

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }

    let mut best = 0.5 * (a + b);
    let mut best_val = f(best);
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx > best_val {
            best = x;
            best_val = fx;
        }
    }
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best_val {
            best = x;
            best_val = fx;
        }
    }
    Ok((best, best_val))
}
