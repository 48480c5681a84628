use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Piecewise-constant diffusion variance rate over `[0, end]`.
///
/// `breakpoints` holds the `n + 1` interval boundaries (first is 0, last is
/// the end of coverage); `sigma_sq[i]` applies on `[breakpoints[i],
/// breakpoints[i + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    breakpoints: Vec<f64>,
    sigma_sq: Vec<f64>,
}

impl VarianceProfile {
    pub fn new(breakpoints: Vec<f64>, sigma_sq: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != sigma_sq.len() + 1 {
            return Err(Error::Config(format!(
                "profile needs one more breakpoint than rates, got {} breakpoints for {} rates",
                breakpoints.len(),
                sigma_sq.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::Config("first breakpoint must be 0".into()));
        }
        for w in breakpoints.windows(2) {
            if !(w[0] < w[1]) || !w[1].is_finite() {
                return Err(Error::Config(
                    "breakpoints must be finite and strictly increasing".into(),
                ));
            }
        }
        for &s in &sigma_sq {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Config(format!(
                    "variance rates must be strictly positive and finite, got {s}"
                )));
            }
        }
        Ok(VarianceProfile {
            breakpoints,
            sigma_sq,
        })
    }

    /// Homogeneous profile with the given rate on `[0, end]`.
    pub fn constant(rate: f64, end: f64) -> Result<Self> {
        VarianceProfile::new(vec![0.0, end], vec![rate])
    }

    /// Two-phase profile switching from `sigma1_sq` to `sigma2_sq` at `horizon / 2`.
    pub fn two_phase(sigma1_sq: f64, sigma2_sq: f64, horizon: f64) -> Result<Self> {
        VarianceProfile::new(
            vec![0.0, horizon / 2.0, horizon],
            vec![sigma1_sq, sigma2_sq],
        )
    }

    /// End of coverage.
    pub fn end(&self) -> f64 {
        *self.breakpoints.last().expect("profile has breakpoints")
    }

    pub fn covers(&self, horizon: f64) -> bool {
        horizon <= self.end()
    }

    /// Interior breakpoints, i.e. the times where the rate actually changes.
    pub fn interior_breakpoints(&self) -> &[f64] {
        &self.breakpoints[1..self.breakpoints.len() - 1]
    }

    /// Rate in force at time `s` (right-continuous; `end` maps to the last rate).
    pub fn rate_at(&self, s: f64) -> f64 {
        let interior = &self.breakpoints[1..self.breakpoints.len() - 1];
        let i = interior.partition_point(|&b| b <= s);
        self.sigma_sq[i.min(self.sigma_sq.len() - 1)]
    }

    /// Exact `∫_a^b σ²(s) ds` for `0 <= a <= b <= end`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &rate) in self.sigma_sq.iter().enumerate() {
            let lo = self.breakpoints[i].max(a);
            let hi = self.breakpoints[i + 1].min(b);
            if hi > lo {
                acc += rate * (hi - lo);
            }
        }
        acc
    }

    /// True when the total variance is normalized: `∫_0^t σ² = t` within
    /// 1e-12 relative. Required only for the two-phase Derrida-Spohn runs.
    pub fn is_normalized(&self, t: f64) -> bool {
        (self.integral(0.0, t) - t).abs() <= 1e-12 * t.max(1.0)
    }
}

impl fmt::Display for VarianceProfile {
    /// Canonical form `start:rate,start:rate,...,end`, e.g. `0:0.36,7:1.64,14`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, rate) in self.sigma_sq.iter().enumerate() {
            write!(f, "{}:{},", self.breakpoints[i], rate)?;
        }
        write!(f, "{}", self.end())
    }
}

impl FromStr for VarianceProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() < 2 {
            return Err(Error::Config(format!(
                "profile '{s}' must look like start:rate,...,end"
            )));
        }
        let mut breakpoints = Vec::new();
        let mut sigma_sq = Vec::new();
        for part in &parts[..parts.len() - 1] {
            let (b, r) = part.split_once(':').ok_or_else(|| {
                Error::Config(format!("profile segment '{part}' must be start:rate"))
            })?;
            breakpoints.push(parse_f64(b)?);
            sigma_sq.push(parse_f64(r)?);
        }
        breakpoints.push(parse_f64(parts[parts.len() - 1])?);
        VarianceProfile::new(breakpoints, sigma_sq)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("'{s}' is not a number")))
}
