//! Closed-form and quadrature-based reference quantities: Gaussian tails,
//! exact and asymptotic expected high-point counts, conditional expectations,
//! bridge-crossing probabilities, the two-point pair bound and decay fits.
//!
//! Everything here is pure and reentrant. Quantities that can leave the f64
//! range are exposed in log domain.

mod counts;
mod fit;
mod pair_bound;
mod quad;
mod tails;

pub use counts::{
    bridge_crossing_prob, conditional_expected_count, default_epsilon,
    expected_high_points_asymptotic, expected_high_points_exact, expected_high_points_linear,
    localization_bound,
};
pub use fit::DecayFit;
pub use pair_bound::{pair_count_bound, PairBoundConfig};
pub use quad::{integrate_ln, QuadratureSpec};
pub use tails::{
    gaussian_tail_asymptotic, gaussian_tail_exact, ln_gaussian_tail_asymptotic,
    ln_gaussian_tail_exact, standard_normal_cdf,
};

/// `ln(Σ exp(x_i))`, stable against under- and overflow.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = values.iter().map(|v| (v - m).exp()).sum();
    m + s.ln()
}

/// `ln(exp(a) + exp(b))`.
pub(crate) fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
