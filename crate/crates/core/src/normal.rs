//! Standard normal CDF and quantile.
//!
//! The CDF maps through the error function: a Taylor expansion of `erf` near
//! the origin and a Lentz-evaluated continued fraction for `erfc` in the
//! tails, both iterated to double-precision convergence. The quantile inverts
//! the CDF by a bracketed Newton iteration. No coefficient tables.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NormalError {
    #[error("quantile argument must lie strictly inside (0, 1), got {0}")]
    QuantileOutOfRange(f64),
}

const FRAC_1_SQRT_PI: f64 = 0.564189583547756286948079451561;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// erf(x) by its Taylor series; accurate for moderate |x| (used below 3/√2,
/// where cancellation is still mild).
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0u32;
    loop {
        k += 1;
        let kf = f64::from(k);
        // term_k = (-1)^k x^(2k+1) / (k! (2k+1)); build it up recursively.
        term *= -x2 / kf;
        let contribution = term / (2.0 * kf + 1.0);
        let next = sum + contribution;
        if next == sum || k > 200 {
            return 2.0 * FRAC_1_SQRT_PI * next;
        }
        sum = next;
    }
}

/// erfc(x) for x > 0 via the continued fraction
/// `erfc(x) = exp(-x²)/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated by the modified Lentz algorithm.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x.max(TINY);
    let mut c = f;
    let mut d = 0.0;
    for i in 1..300 {
        let a_i = f64::from(i) / 2.0;
        // b_i = x for every level.
        d = x + a_i * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a_i / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() * FRAC_1_SQRT_PI / f
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    let z = x.abs() / SQRT_2;
    let tail_half = if z < 3.0 {
        0.5 * (1.0 - erf_series(z))
    } else {
        0.5 * erfc_continued_fraction(z)
    };
    if x >= 0.0 {
        1.0 - tail_half
    } else {
        tail_half
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_PI / SQRT_2 * (-0.5 * x * x).exp()
}

/// Standard normal quantile (inverse CDF) on the open interval (0, 1).
///
/// Solves `normal_cdf(x) = p` by Newton steps safeguarded by a shrinking
/// bracket, starting from a crude tail-order guess; converges to full double
/// precision for any valid `p`.
pub fn normal_quantile(p: f64) -> Result<f64, NormalError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(NormalError::QuantileOutOfRange(p));
    }
    // Symmetry: solve in the lower half and mirror.
    if p > 0.5 {
        return Ok(-normal_quantile(1.0 - p)?);
    }
    let (mut lo, mut hi) = (-40.0_f64, 0.0_f64);
    // Crude initial guess from the exponential tail order.
    let mut x = -(-2.0 * (p * 2.5066282746310002).ln()).max(0.0).sqrt();
    if !(lo..=hi).contains(&x) {
        x = -1.0;
    }
    for _ in 0..120 {
        let f = normal_cdf(x) - p;
        if f > 0.0 {
            hi = x;
        } else if f < 0.0 {
            lo = x;
        } else {
            return Ok(x);
        }
        let derivative = normal_pdf(x);
        let mut next = x - f / derivative;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= f64::EPSILON * x.abs().max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}
