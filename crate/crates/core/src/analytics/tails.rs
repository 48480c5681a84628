use libm::erfc;

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(())
}

/// `P[N(0, σ²) > a]` via the complementary error function.
///
/// Relative accuracy is well inside 1e-12 for `a/σ ≤ 30`; for larger
/// arguments use [`ln_gaussian_tail_exact`].
pub fn gaussian_tail_exact(a: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(0.5 * erfc(a / (sigma * SQRT_2)))
}

/// `ln P[N(0, σ²) > a]`, finite far beyond the underflow point of the
/// linear tail.
///
/// Uses `erfc` up to `a/σ = 25·√2` and the continued asymptotic expansion
/// `Q(u) = φ(u)/u · (1 − u⁻² + 3u⁻⁴ − 15u⁻⁶ + 105u⁻⁸)` past it, where the
/// dropped term is below 1e-12 relative.
pub fn ln_gaussian_tail_exact(a: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let u = a / sigma;
    if u < 25.0 * SQRT_2 {
        Ok((0.5 * erfc(u / SQRT_2)).ln())
    } else {
        let v = u * u;
        let series = 1.0 - 1.0 / v + 3.0 / (v * v) - 15.0 / (v * v * v)
            + 105.0 / (v * v * v * v);
        Ok(-0.5 * v - u.ln() - LN_SQRT_2PI + series.ln())
    }
}

/// Leading-order Gaussian tail `(2π)^{-1/2} (σ/a) exp(−a²/2σ²)`.
///
/// Also a valid upper bound on the exact tail for every `a > 0`.
pub fn gaussian_tail_asymptotic(a: f64, sigma: f64) -> Result<f64> {
    Ok(ln_gaussian_tail_asymptotic(a, sigma)?.exp())
}

/// Log of [`gaussian_tail_asymptotic`].
pub fn ln_gaussian_tail_asymptotic(a: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(a > 0.0) {
        return Err(Error::Domain(format!(
            "asymptotic tail needs a > 0, got {a}"
        )));
    }
    let u = a / sigma;
    Ok(-0.5 * u * u - u.ln() - LN_SQRT_2PI)
}

/// Standard normal CDF `Φ(x)`.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}
