use crate::analytics::ln_add;
use crate::error::{Error, Result};

/// Tolerance and budget of one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Target relative error of the integral.
    pub rel_tol: f64,
    /// Hard cap on interval subdivisions before giving up.
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-8,
            max_subdivisions: 20_000,
        }
    }
}

/// `ln |e^a − e^b|` for `a ≥ b`; −inf when equal.
fn ln_abs_sub(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY || a == b {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// Simpson estimate of `∫ e^{ln_f}` over `[x0, x2]` in log domain, given
/// the three log-values.
fn ln_simpson(h: f64, l0: f64, l1: f64, l2: f64) -> f64 {
    let m = l0.max(l1).max(l2);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + ((h / 6.0) * ((l0 - m).exp() + 4.0 * (l1 - m).exp() + (l2 - m).exp())).ln()
}

/// Adaptive Simpson integration of a non-negative integrand supplied as its
/// natural log. Returns `ln ∫_a^b e^{ln_f(x)} dx`.
///
/// Each interval scales by its own peak log-value, so integrands spanning
/// hundreds of e-folds neither under- nor overflow. Per-interval acceptance
/// is relative, which for non-negative integrands bounds the total relative
/// error by `spec.rel_tol`.
pub fn integrate_ln<F: FnMut(f64) -> f64>(
    mut ln_f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "integration bounds must be finite with a <= b, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(f64::NEG_INFINITY);
    }

    struct Task {
        x0: f64,
        x2: f64,
        l0: f64,
        l1: f64,
        l2: f64,
        whole: f64,
    }

    let ln_tol = spec.rel_tol.ln();
    let mut used = 0usize;
    let mut total = f64::NEG_INFINITY;
    let mut err_total = f64::NEG_INFINITY;

    // Coarse prescan of the integrand scale. Intervals whose entire mass
    // sits ~120 e-folds under peak·width can never matter at any supported
    // tolerance; without this floor, steep exponential tails demand endless
    // refinement to hit a tolerance relative to their own negligible mass.
    let prescan = 32;
    let mut ln_peak = f64::NEG_INFINITY;
    for i in 0..=prescan {
        let x = a + (b - a) * i as f64 / prescan as f64;
        ln_peak = ln_peak.max(ln_f(x));
    }
    let prune_below = ln_peak + (b - a).ln() - 120.0;

    let mid = 0.5 * (a + b);
    let (l0, l1, l2) = (ln_f(a), ln_f(mid), ln_f(b));
    let mut stack = vec![Task {
        x0: a,
        x2: b,
        l0,
        l1,
        l2,
        whole: ln_simpson(b - a, l0, l1, l2),
    }];

    while let Some(t) = stack.pop() {
        let xm = 0.5 * (t.x0 + t.x2);
        // The interval is one ulp wide: it cannot be split any further.
        if !(t.x0 < xm && xm < t.x2) {
            total = ln_add(total, t.whole);
            continue;
        }
        let xl = 0.5 * (t.x0 + xm);
        let xr = 0.5 * (xm + t.x2);
        let ll = ln_f(xl);
        let lr = ln_f(xr);
        let h = xm - t.x0;
        let left = ln_simpson(h, t.l0, ll, t.l1);
        let right = ln_simpson(h, t.l1, lr, t.l2);
        let fine = ln_add(left, right);
        let err = ln_abs_sub(fine.max(t.whole), fine.min(t.whole)) - 15f64.ln();

        // Interval converged when its error is small relative to its own
        // mass, negligible outright, or below the global pruning floor.
        // The width guard stops pathological refinement around integrable
        // endpoint singularities.
        let width_exhausted = (t.x2 - t.x0) < 1e-12 * (b - a);
        let negligible = ln_add(fine, err) <= prune_below;
        if err <= ln_tol + fine || fine == f64::NEG_INFINITY || negligible || width_exhausted {
            total = ln_add(total, fine);
            err_total = ln_add(err_total, err);
            continue;
        }
        used += 1;
        if used > spec.max_subdivisions {
            // Fold the unfinished work into the bracket before reporting.
            let mut rest = fine;
            let mut rest_err = err;
            for s in &stack {
                rest = ln_add(rest, s.whole);
                rest_err = ln_add(rest_err, s.whole);
            }
            let log_sum = ln_add(total, rest);
            let log_err = ln_add(err_total, rest_err);
            let log_lo = if log_err >= log_sum {
                f64::NEG_INFINITY
            } else {
                ln_abs_sub(log_sum, log_err)
            };
            return Err(Error::QuadratureNoConvergence {
                log_lo,
                log_hi: ln_add(log_sum, log_err),
                subdivisions: used,
            });
        }
        stack.push(Task {
            x0: t.x0,
            x2: xm,
            l0: t.l0,
            l1: ll,
            l2: t.l1,
            whole: left,
        });
        stack.push(Task {
            x0: xm,
            x2: t.x2,
            l0: t.l1,
            l1: lr,
            l2: t.l2,
            whole: right,
        });
    }
    Ok(total)
}
