//! Pure functions from snapshots to scalar observables: centerings,
//! additive martingales, high-point counts and recentered maxima.
//!
//! All exponential sums are accumulated relative to the running maximum
//! exponent: at large horizons individual terms underflow f64 while the sum
//! itself is order one.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fmt::{compact_f64, csv_f64};
use crate::process::ParticleSnapshot;

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// The parameter triple `(α, Δ_α, σ1)` governing high-point thresholds and
/// martingale exponents. `Δ_α = √2 − α` and `σ1 = Δ_α/√2` are derived at
/// construction; there is no independent storage to drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaParams {
    alpha: f64,
    delta: f64,
    sigma1: f64,
}

impl AlphaParams {
    /// From the high-point parameter `α ∈ (0, √2)`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < SQRT_2) {
            return Err(Error::Domain(format!(
                "alpha must lie strictly in (0, sqrt(2)), got {alpha}"
            )));
        }
        let delta = SQRT_2 - alpha;
        Ok(AlphaParams {
            alpha,
            delta,
            sigma1: delta / SQRT_2,
        })
    }

    /// From the first-phase speed `σ1 ∈ (0, 1)` via the matching
    /// `Δ = √2 σ1`, i.e. `α = √2 (1 − σ1)`.
    pub fn from_sigma1(sigma1: f64) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma1 < 1.0) {
            return Err(Error::Domain(format!(
                "sigma1 must lie strictly in (0, 1), got {sigma1}"
            )));
        }
        let delta = SQRT_2 * sigma1;
        Ok(AlphaParams {
            alpha: SQRT_2 - delta,
            delta,
            sigma1,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `Δ_α = √2 − α`, the high-point speed.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `σ1 = Δ_α/√2`, the matched first-phase speed.
    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    /// Whether the direct two-point computation gives a finite second
    /// moment for `Y_α`; variance-based diagnostics are restricted to this
    /// regime.
    pub fn sq_integrable(&self) -> bool {
        self.delta < 1.0
    }

    /// Inclusive high-point threshold `Δ_α t` at time `t`.
    pub fn threshold(&self, t: f64) -> f64 {
        self.delta * t
    }
}

/// `m(t) = √2 t − 3/(2√2) log t`, the KPP front centering.
pub fn centering_kpp(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("centering needs t > 0, got {t}")));
    }
    Ok(SQRT_2 * t - 3.0 / (2.0 * SQRT_2) * t.ln())
}

/// `m_REM(t) = √2 t − 1/(2√2) log t`, the REM-collapse centering.
pub fn centering_rem(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("centering needs t > 0, got {t}")));
    }
    Ok(SQRT_2 * t - 1.0 / (2.0 * SQRT_2) * t.ln())
}

/// Derivative martingale `Z(t) = Σ_k (√2 t − x_k) exp(−√2 (√2 t − x_k))`.
///
/// The sum is signed: particles above `√2 t` contribute negative terms.
pub fn derivative_martingale(s: &ParticleSnapshot) -> f64 {
    let t = s.time;
    let mut max_e = f64::NEG_INFINITY;
    for &x in &s.positions {
        max_e = max_e.max(-SQRT_2 * (SQRT_2 * t - x));
    }
    if max_e == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut acc = 0.0;
    for &x in &s.positions {
        let w = SQRT_2 * t - x;
        acc += w * (-SQRT_2 * w - max_e).exp();
    }
    max_e.exp() * acc
}

/// Shared kernel of both McKean martingale forms:
/// `Σ_k exp(−t (1 + δ²/2) + δ x_k)`.
fn additive_martingale(s: &ParticleSnapshot, delta: f64) -> f64 {
    let t = s.time;
    let offset = -t * (1.0 + 0.5 * delta * delta);
    let mut max_e = f64::NEG_INFINITY;
    for &x in &s.positions {
        max_e = max_e.max(offset + delta * x);
    }
    let mut acc = 0.0;
    for &x in &s.positions {
        acc += (offset + delta * x - max_e).exp();
    }
    max_e.exp() * acc
}

/// McKean's martingale `Y_α(t) = Σ_k exp(−t (1 + Δ_α²/2) + Δ_α x_k)`.
pub fn mckean_martingale(s: &ParticleSnapshot, p: &AlphaParams) -> f64 {
    additive_martingale(s, p.delta)
}

/// McKean's martingale in its speed form
/// `Ẑ(t) = Σ_k exp(−t (1 + σ1²) + √2 σ1 x_k)`.
///
/// Delegates through the matching `α = √2 (1 − σ1)`, so it coincides with
/// [`mckean_martingale`] bit for bit on the matched parameters.
pub fn mckean_martingale_sigma(s: &ParticleSnapshot, sigma1: f64) -> Result<f64> {
    Ok(mckean_martingale(s, &AlphaParams::from_sigma1(sigma1)?))
}

/// `Z_α(t) = #{k : x_k(t) ≥ Δ_α t}` with inclusive threshold.
pub fn high_point_count(s: &ParticleSnapshot, p: &AlphaParams) -> u64 {
    let thr = p.threshold(s.time);
    s.positions.iter().filter(|&&x| x >= thr).count() as u64
}

/// Split `Z_α` into `(Z_α^≤, Z_α^>)`: high points whose lineage stayed below
/// the barrier line versus those that crossed it.
pub fn localized_counts(s: &ParticleSnapshot, p: &AlphaParams) -> Result<(u64, u64)> {
    let flags = s.barrier_flags()?;
    let thr = p.threshold(s.time);
    let mut z_le = 0;
    let mut z_gt = 0;
    for (&x, &crossed) in s.positions.iter().zip(flags) {
        if x >= thr {
            if crossed {
                z_gt += 1;
            } else {
                z_le += 1;
            }
        }
    }
    Ok((z_le, z_gt))
}

/// Which centering to subtract from the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    Kpp,
    Rem,
    None,
}

impl Centering {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "kpp" => Some(Centering::Kpp),
            "rem" => Some(Centering::Rem),
            "none" => Some(Centering::None),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Centering::Kpp => "kpp",
            Centering::Rem => "rem",
            Centering::None => "none",
        }
    }
}

/// `M(t)`, `M̂(t)` or the raw maximum, depending on the centering.
pub fn recentered_max(s: &ParticleSnapshot, centering: Centering) -> Result<f64> {
    let max = s.max_position();
    match centering {
        Centering::Kpp => Ok(max - centering_kpp(s.time)?),
        Centering::Rem => Ok(max - centering_rem(s.time)?),
        Centering::None => Ok(max),
    }
}

/// Time series of every functional at the checkpoint times of one replica.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleTrace {
    pub times: Vec<f64>,
    pub n: Vec<u64>,
    pub max: Vec<f64>,
    /// Derivative martingale `Z(t)` per checkpoint.
    pub derivative: Vec<f64>,
    /// The α grid the per-α series below refer to.
    pub alphas: Vec<f64>,
    /// `mckean[a][c]` = `Y_α(times[c])` for `alphas[a]`.
    pub mckean: Vec<Vec<f64>>,
    pub count: Vec<Vec<u64>>,
    pub count_le: Vec<Vec<u64>>,
    pub count_gt: Vec<Vec<u64>>,
}

impl MartingaleTrace {
    /// Evaluate every functional on a run's snapshots.
    ///
    /// Without barrier flags the unreachable-barrier convention applies:
    /// `Z_α^≤ = Z_α` and `Z_α^> = 0`.
    pub fn from_snapshots(snaps: &[ParticleSnapshot], params: &[AlphaParams]) -> Self {
        let mut trace = MartingaleTrace {
            times: Vec::with_capacity(snaps.len()),
            n: Vec::with_capacity(snaps.len()),
            max: Vec::with_capacity(snaps.len()),
            derivative: Vec::with_capacity(snaps.len()),
            alphas: params.iter().map(|p| p.alpha()).collect(),
            mckean: vec![Vec::with_capacity(snaps.len()); params.len()],
            count: vec![Vec::with_capacity(snaps.len()); params.len()],
            count_le: vec![Vec::with_capacity(snaps.len()); params.len()],
            count_gt: vec![Vec::with_capacity(snaps.len()); params.len()],
        };
        for s in snaps {
            trace.times.push(s.time);
            trace.n.push(s.len() as u64);
            trace.max.push(s.max_position());
            trace.derivative.push(derivative_martingale(s));
            for (a, p) in params.iter().enumerate() {
                let z = high_point_count(s, p);
                let (le, gt) = match localized_counts(s, p) {
                    Ok(split) => split,
                    Err(_) => (z, 0),
                };
                debug_assert_eq!(le + gt, z);
                trace.mckean[a].push(mckean_martingale(s, p));
                trace.count[a].push(z);
                trace.count_le[a].push(le);
                trace.count_gt[a].push(gt);
            }
        }
        trace
    }

    /// One row per checkpoint:
    /// `time,n,max,z_derivative[,y_alpha_<α>,count_<α>,count_le_<α>,count_gt_<α>]…,max_kpp,max_rem`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        write!(out, "time,n,max,z_derivative")?;
        for &a in &self.alphas {
            let a = compact_f64(a);
            write!(
                out,
                ",y_alpha_{a},count_{a},count_le_{a},count_gt_{a}"
            )?;
        }
        writeln!(out, ",max_kpp,max_rem")?;
        for c in 0..self.times.len() {
            let t = self.times[c];
            write!(
                out,
                "{},{},{},{}",
                csv_f64(t),
                self.n[c],
                csv_f64(self.max[c]),
                csv_f64(self.derivative[c])
            )?;
            for a in 0..self.alphas.len() {
                write!(
                    out,
                    ",{},{},{},{}",
                    csv_f64(self.mckean[a][c]),
                    self.count[a][c],
                    self.count_le[a][c],
                    self.count_gt[a][c]
                )?;
            }
            let (kpp, rem) = if t > 0.0 {
                (
                    self.max[c] - centering_kpp(t).expect("t > 0"),
                    self.max[c] - centering_rem(t).expect("t > 0"),
                )
            } else {
                (f64::NAN, f64::NAN)
            };
            writeln!(out, ",{},{}", csv_f64(kpp), csv_f64(rem))?;
        }
        Ok(())
    }
}
