use crate::error::{Error, Result};

/// Exponential-decay fit `estimate(r) ≈ C e^{−κ r}` over an `r` grid, with a
/// normal-theory confidence interval for the rate.
///
/// The decay rate is reported as a fitted quantity together with the
/// theoretically admissible range `κ < 1 − Δ_α²/2`; no specific value is
/// ever asserted.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DecayFit {
    pub r_values: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Fitted rate κ̂ per unit r (minus the slope of log estimate vs r).
    pub fitted_rate: f64,
    /// 95% confidence interval for κ̂.
    pub ci: (f64, f64),
}

impl DecayFit {
    /// Weighted least squares of `ln estimates` against `r_values`.
    ///
    /// `ln_std_errors[i]` is the standard error of `ln estimates[i]`; pass
    /// an empty slice for an unweighted fit, in which case the rate CI uses
    /// the residual variance.
    pub fn fit(r_values: &[f64], estimates: &[f64], ln_std_errors: &[f64]) -> Result<Self> {
        let n = r_values.len();
        if n < 2 || estimates.len() != n {
            return Err(Error::Domain(
                "decay fit needs at least two (r, estimate) pairs".into(),
            ));
        }
        for w in r_values.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Domain("r grid must be strictly increasing".into()));
            }
        }
        for &e in estimates {
            if !(e > 0.0) {
                return Err(Error::Domain(format!(
                    "estimates must be positive to fit a log-linear decay, got {e}"
                )));
            }
        }
        let weighted = !ln_std_errors.is_empty();
        if weighted && (ln_std_errors.len() != n || ln_std_errors.iter().any(|&s| !(s > 0.0))) {
            return Err(Error::Domain(
                "ln_std_errors must be positive and match the grid length".into(),
            ));
        }

        let w: Vec<f64> = if weighted {
            ln_std_errors.iter().map(|s| 1.0 / (s * s)).collect()
        } else {
            vec![1.0; n]
        };
        let y: Vec<f64> = estimates.iter().map(|e| e.ln()).collect();
        let wsum: f64 = w.iter().sum();
        let xbar = r_values.iter().zip(&w).map(|(x, w)| w * x).sum::<f64>() / wsum;
        let ybar = y.iter().zip(&w).map(|(y, w)| w * y).sum::<f64>() / wsum;
        let sxx: f64 = r_values
            .iter()
            .zip(&w)
            .map(|(x, w)| w * (x - xbar) * (x - xbar))
            .sum();
        let sxy: f64 = r_values
            .iter()
            .zip(&y)
            .zip(&w)
            .map(|((x, y), w)| w * (x - xbar) * (y - ybar))
            .sum();
        let slope = sxy / sxx;

        let slope_se = if weighted {
            // Known per-point variances: Var(slope) = 1/Σ w (x − x̄)².
            (1.0 / sxx).sqrt()
        } else {
            let dof = (n as f64 - 2.0).max(1.0);
            let ss_res: f64 = r_values
                .iter()
                .zip(&y)
                .map(|(x, y)| {
                    let pred = ybar + slope * (x - xbar);
                    (y - pred) * (y - pred)
                })
                .sum();
            (ss_res / dof / sxx).sqrt()
        };

        let kappa = -slope;
        let z = 1.959_963_984_540_054; // 97.5% standard normal quantile
        Ok(DecayFit {
            r_values: r_values.to_vec(),
            estimates: estimates.to_vec(),
            fitted_rate: kappa,
            ci: (kappa - z * slope_se, kappa + z * slope_se),
        })
    }
}
