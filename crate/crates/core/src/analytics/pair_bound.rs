use crate::analytics::counts::epsilon_constraints;
use crate::analytics::quad::{integrate_ln, QuadratureSpec};
use crate::analytics::tails::ln_gaussian_tail_exact;
use crate::analytics::ln_add;
use crate::error::{Error, Result};
use crate::functionals::AlphaParams;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;

/// Parameters of the two-point pair bound, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBoundConfig {
    pub alpha: AlphaParams,
    pub eps: f64,
    pub r: f64,
    pub t: f64,
    pub quadrature: QuadratureSpec,
}

impl PairBoundConfig {
    pub fn new(
        alpha: AlphaParams,
        eps: f64,
        r: f64,
        t: f64,
        quadrature: QuadratureSpec,
    ) -> Result<Self> {
        if !(r > 0.0 && r < t) {
            return Err(Error::Config(format!(
                "pair bound needs 0 < r < t, got r={r}, t={t}"
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::Config(format!("epsilon must be > 0, got {eps}")));
        }
        let (split_bound, decay_bound) = epsilon_constraints(&alpha);
        if eps >= split_bound || eps >= decay_bound {
            return Err(Error::Config(format!(
                "epsilon {eps} violates the pair-counting constraints (must be < {} and < {})",
                split_bound, decay_bound
            )));
        }
        Ok(PairBoundConfig {
            alpha,
            eps,
            r,
            t,
            quadrature,
        })
    }
}

/// Log of the unconstrained two-point upper bound on the expected number of
/// unordered same-ancestor high-point pairs among barrier-respecting paths:
///
/// `∫_r^t e^{2t−γ} ∫_{−∞}^{(Δ+ε)γ} φ_γ(y) · P[N(0, t−γ) ≥ Δt − y]² dy dγ`.
///
/// The inner integral runs in the variable `u = (Δt − y)/√(t−γ)`, which
/// turns the squared-tail factor into the standard-normal tail `Q(u)²`, and
/// is split at `y = (Δ−ε)t` — above/below the slightly-lowered target.
pub fn pair_count_bound(cfg: &PairBoundConfig) -> Result<f64> {
    let d = cfg.alpha.delta();
    let (eps, t) = (cfg.eps, cfg.t);
    let outer_spec = cfg.quadrature;
    // The outer error estimator saturates at the inner integral's noise
    // floor, so the inner pass runs two orders tighter.
    let spec = &QuadratureSpec {
        rel_tol: (outer_spec.rel_tol / 100.0).max(1e-13),
        max_subdivisions: outer_spec.max_subdivisions,
    };

    let ln_inner = |gamma: f64| -> Result<f64> {
        let tg = t - gamma;
        if tg < 1e-12 {
            return Ok(f64::NEG_INFINITY);
        }
        let c = tg.sqrt();
        // y ∈ (−∞, (Δ+ε)γ]  ⇔  u ∈ [u_lo, ∞).
        let u_lo = (d * t - (d + eps) * gamma) / c;
        // y = (Δ−ε)t  ⇔  u = εt/c; below the threshold means u above it.
        let u_split = eps * t / c;

        let ln_g = |u: f64| -> f64 {
            let y = d * t - c * u;
            let ln_phi = -y * y / (2.0 * gamma) - 0.5 * gamma.ln() - LN_SQRT_2PI;
            let ln_q = ln_gaussian_tail_exact(u, 1.0).expect("unit sigma");
            ln_phi + 2.0 * ln_q
        };

        // Effective upper truncation: walk outward until the integrand has
        // dropped 90 e-folds below the best value seen.
        let start = u_lo.max(0.0);
        let mut peak = f64::NEG_INFINITY;
        let mut u_hi;
        let step = 0.5;
        let mut u = start;
        loop {
            let v = ln_g(u);
            if v > peak {
                peak = v;
            }
            u_hi = u;
            if v < peak - 90.0 && u > start + 2.0 {
                break;
            }
            if u - start > 400.0 {
                break;
            }
            u += step;
        }

        let mut pieces = f64::NEG_INFINITY;
        let lo_seg_end = u_split.min(u_hi);
        if lo_seg_end > u_lo {
            pieces = ln_add(pieces, integrate_ln(ln_g, u_lo, lo_seg_end, spec)?);
        }
        if u_hi > u_split.max(u_lo) {
            pieces = ln_add(pieces, integrate_ln(ln_g, u_split.max(u_lo), u_hi, spec)?);
        }
        Ok(c.ln() + pieces)
    };

    // The outer integrand needs fallible inner evaluations; bubble the first
    // failure out of the closure through a capture.
    let mut inner_err: Option<Error> = None;
    let outer = integrate_ln(
        |gamma| match ln_inner(gamma) {
            Ok(v) => 2.0 * t - gamma + v,
            Err(e) => {
                if inner_err.is_none() {
                    inner_err = Some(e);
                }
                f64::NEG_INFINITY
            }
        },
        cfg.r,
        t,
        &outer_spec,
    );
    if let Some(e) = inner_err {
        return Err(e);
    }
    outer
}
