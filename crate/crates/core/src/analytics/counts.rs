use crate::analytics::tails::ln_gaussian_tail_exact;
use crate::analytics::log_sum_exp;
use crate::error::{Error, Result};
use crate::functionals::AlphaParams;
use crate::process::ParticleSnapshot;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;

/// `log E Z_α(t) = t + log P[N(0, t) ≥ Δ_α t]`.
///
/// The expected population `e^t` times the single-particle tail. `t = 0` is
/// excluded: the time-zero law is a point mass with `Z_α(0) = 1`, which the
/// formula does not describe.
pub fn expected_high_points_exact(p: &AlphaParams, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "expected count needs t > 0, got {t}"
        )));
    }
    Ok(t + ln_gaussian_tail_exact(p.delta() * t, t.sqrt())?)
}

/// Linear-domain accessor for [`expected_high_points_exact`]; overflows to
/// infinity when the count does not fit in f64.
pub fn expected_high_points_linear(p: &AlphaParams, t: f64) -> Result<f64> {
    Ok(expected_high_points_exact(p, t)?.exp())
}

/// Leading asymptotics
/// `log E Z_α(t) ~ (1 − Δ_α²/2) t − ½ log t − log(Δ_α √(2π))`.
pub fn expected_high_points_asymptotic(p: &AlphaParams, t: f64) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::Domain(format!(
            "asymptotic expected count needs t > 1, got {t}"
        )));
    }
    let d = p.delta();
    Ok((1.0 - 0.5 * d * d) * t - 0.5 * t.ln() - (d.ln() + LN_SQRT_2PI))
}

/// `log E[Z_α(t) | F_r]` evaluated on the time-`r` snapshot:
/// `log Σ_i e^{t−r} P[N(0, t−r) ≥ Δ_α t − x_i(r)]`.
pub fn conditional_expected_count(
    snapshot_r: &ParticleSnapshot,
    p: &AlphaParams,
    t: f64,
) -> Result<f64> {
    let r = snapshot_r.time;
    if !(r < t) {
        return Err(Error::Domain(format!(
            "conditional expectation needs snapshot time {r} < t = {t}"
        )));
    }
    let sd = (t - r).sqrt();
    let thr = p.delta() * t;
    let terms: Vec<f64> = snapshot_r
        .positions
        .iter()
        .map(|&x| ln_gaussian_tail_exact(thr - x, sd))
        .collect::<Result<_>>()?;
    Ok((t - r) + log_sum_exp(&terms))
}

/// Crossing probability `exp(−2 d0 d1 / length)` of a unit-rate Brownian
/// bridge against a line it starts `d0` and ends `d1` below.
pub fn bridge_crossing_prob(d0: f64, d1: f64, length: f64) -> Result<f64> {
    if !(length > 0.0) {
        return Err(Error::Domain(format!(
            "bridge length must be > 0, got {length}"
        )));
    }
    if d0 < 0.0 || d1 < 0.0 {
        return Err(Error::Domain(format!(
            "distances below the line must be >= 0, got ({d0}, {d1})"
        )));
    }
    Ok((-2.0 * d0 * d1 / length).exp())
}

/// Log of the overshoot-count bound `E Z_α^>(t) ≤ E Z_α(t) · e^{−r ε²/4}`.
///
/// Uses the stated `ε²/4` rate; the proof's sharper `ε²/2 + o(r)` is kept
/// as documentation only.
pub fn localization_bound(p: &AlphaParams, eps: f64, r: f64, t: f64) -> Result<f64> {
    if !(r > 0.0 && r < t) {
        return Err(Error::Domain(format!(
            "localization bound needs 0 < r < t, got r={r}, t={t}"
        )));
    }
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("epsilon must be >= 0, got {eps}")));
    }
    Ok(expected_high_points_exact(p, t)? - r * eps * eps / 4.0)
}

/// Half the tighter of the two pair-counting constraints on `ε`:
/// `ε (2/Δ_α + Δ_α) < 1 − Δ_α²/2` and `Δ_α²/2 − 1 + Δ_α ε < 0`.
pub fn default_epsilon(p: &AlphaParams) -> f64 {
    let d = p.delta();
    let margin = 1.0 - 0.5 * d * d;
    let bound_split = margin / (2.0 / d + d);
    let bound_decay = margin / d;
    0.5 * bound_split.min(bound_decay)
}

/// The two ε bounds themselves, exposed for diagnostics.
pub fn epsilon_constraints(p: &AlphaParams) -> (f64, f64) {
    let d = p.delta();
    let margin = 1.0 - 0.5 * d * d;
    (margin / (2.0 / d + d), margin / d)
}
