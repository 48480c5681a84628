//! Monte Carlo harness: replica farms with deterministic parallel RNG,
//! canonical aggregation, and one named experiment per studied limit law.
//!
//! Determinism contract: a replica's result depends only on (master seed,
//! replica id, config), and reports fold rows in ascending replica order.
//! Worker count therefore never changes a single byte of a report. Replicas
//! that hit the population cap are excluded from aggregates and counted in
//! `failures`.

mod config;
mod report;

pub use config::{ExperimentConfig, ExperimentKind};
pub use report::{merge, AggregateReport, FailureRecord, ReplicaRow, StatSummary};

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::analytics::{
    conditional_expected_count, expected_high_points_exact, pair_count_bound, DecayFit,
    PairBoundConfig,
};
use crate::error::{Error, Result};
use crate::fmt::compact_f64;
use crate::functionals::{
    centering_kpp, centering_rem, derivative_martingale, high_point_count, localized_counts,
    mckean_martingale, MartingaleTrace,
};
use crate::process::{simulate, split_by_ancestor, BarrierSpec, SimConfig, VarianceProfile};
use crate::stats::{ln_variance_std_error, median, pearson, quantile_sorted};

/// Run one experiment and return its report.
pub fn run(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    match cfg.kind {
        ExperimentKind::Slln => run_slln(cfg),
        ExperimentKind::Onset => run_onset(cfg),
        ExperimentKind::Decorrelation => run_decorrelation(cfg),
        ExperimentKind::Localization => run_localization(cfg),
        ExperimentKind::PairCount => run_pair_count(cfg),
        ExperimentKind::RemCollapse => run_rem_collapse(cfg),
        ExperimentKind::Trace => Ok(run_martingale_trace(cfg)?.report),
    }
}

/// Parallel map over the replica range; population-cap failures become
/// failure records, everything else aborts the experiment.
fn run_rows<F>(cfg: &ExperimentConfig, per_replica: F) -> Result<(Vec<ReplicaRow>, Vec<FailureRecord>)>
where
    F: Fn(u64) -> Result<BTreeMap<String, f64>> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers())
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let ids: Vec<u64> = (cfg.replica_start..cfg.replica_start + cfg.replicas).collect();
    let outcomes: Vec<(u64, Result<BTreeMap<String, f64>>)> =
        pool.install(|| ids.par_iter().map(|&id| (id, per_replica(id))).collect());

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (id, outcome) in outcomes {
        match outcome {
            Ok(values) => rows.push(ReplicaRow {
                replica_id: id,
                values,
            }),
            Err(e @ Error::PopulationCap { .. }) => failures.push(FailureRecord {
                replica_id: id,
                message: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok((rows, failures))
}

/// Column of one key across rows, in ascending replica order.
fn column(rows: &[ReplicaRow], key: &str) -> Vec<f64> {
    rows.iter().filter_map(|r| r.values.get(key).copied()).collect()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    v
}

/// Assemble the report for already-computed rows. `merge` re-enters here so
/// that merged reports coincide bitwise with single runs.
pub(crate) fn finalize(
    cfg: &ExperimentConfig,
    rows: Vec<ReplicaRow>,
    failures: Vec<FailureRecord>,
    wallclock_ms: f64,
) -> Result<AggregateReport> {
    let aggregates = AggregateReport::aggregate_rows(&rows);
    let mut metrics = BTreeMap::new();
    let mut decay_fit = None;

    match cfg.kind {
        ExperimentKind::Slln => {
            for p in cfg.alpha_params()? {
                let a = compact_f64(p.alpha());
                let rho = column(&rows, &format!("rho_{a}"));
                let rho_sorted = sorted(rho.clone());
                metrics.insert(format!("median_rho_{a}"), quantile_sorted(&rho_sorted, 0.5));
                metrics.insert(
                    format!("iqr_rho_{a}"),
                    quantile_sorted(&rho_sorted, 0.75) - quantile_sorted(&rho_sorted, 0.25),
                );
                let znorm = column(&rows, &format!("z_norm_{a}"));
                let y_r = column(&rows, &format!("y_r_{a}"));
                metrics.insert(format!("corr_znorm_yr_{a}"), pearson(&znorm, &y_r));
                metrics.insert(
                    format!("log_ez_{a}"),
                    expected_high_points_exact(&p, cfg.t)?,
                );
            }
        }
        ExperimentKind::Onset => {
            for p in cfg.alpha_params()? {
                let a = compact_f64(p.alpha());
                let dev = column(&rows, &format!("onset_absdev_{a}"));
                metrics.insert(format!("median_absdev_{a}"), median(&dev));
                metrics.insert(
                    format!("log_ez_{a}"),
                    expected_high_points_exact(&p, cfg.t)?,
                );
            }
        }
        ExperimentKind::Decorrelation => {
            for p in cfg.alpha_params()? {
                let a = compact_f64(p.alpha());
                let mut var_estimates = Vec::new();
                let mut ln_ses = Vec::new();
                for &r in &cfg.r_grid {
                    let rr = compact_f64(r);
                    let d = column(&rows, &format!("d_r{rr}_{a}"));
                    let n = d.len() as f64;
                    let mean = d.iter().sum::<f64>() / n.max(1.0);
                    let var = if d.len() > 1 {
                        d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
                    } else {
                        f64::NAN
                    };
                    metrics.insert(format!("var_d_r{rr}_{a}"), var);
                    for c in [0.25, 0.5, 1.0] {
                        let frac =
                            d.iter().filter(|x| x.abs() > c).count() as f64 / n.max(1.0);
                        metrics.insert(format!("p_dev_c{}_r{rr}_{a}", compact_f64(c)), frac);
                    }
                    var_estimates.push(var);
                    ln_ses.push(ln_variance_std_error(&d));
                }
                let admissible = 1.0 - p.delta() * p.delta() / 2.0;
                metrics.insert(format!("kappa_admissible_max_{a}"), admissible);
                let fittable = var_estimates.iter().all(|v| v.is_finite() && *v > 0.0)
                    && ln_ses.iter().all(|s| s.is_finite() && *s > 0.0)
                    && cfg.r_grid.len() >= 2;
                if fittable {
                    let fit = DecayFit::fit(&cfg.r_grid, &var_estimates, &ln_ses)?;
                    metrics.insert(format!("kappa_{a}"), fit.fitted_rate);
                    metrics.insert(format!("kappa_ci_lo_{a}"), fit.ci.0);
                    metrics.insert(format!("kappa_ci_hi_{a}"), fit.ci.1);
                    if decay_fit.is_none() {
                        decay_fit = Some(fit);
                    }
                }
            }
        }
        ExperimentKind::Localization => {
            for p in cfg.alpha_params()? {
                let a = compact_f64(p.alpha());
                let eps = cfg.eps_for(&p);
                let ez = expected_high_points_exact(&p, cfg.t)?.exp();
                metrics.insert(format!("eps_{a}"), eps);
                for &r in &cfg.r_grid {
                    let rr = compact_f64(r);
                    let zgt = column(&rows, &format!("z_gt_r{rr}_{a}"));
                    let n = zgt.len() as f64;
                    let mean_gt = zgt.iter().sum::<f64>() / n.max(1.0);
                    metrics.insert(format!("overshoot_ratio_r{rr}_{a}"), mean_gt / ez);
                    metrics.insert(
                        format!("bound_ratio_r{rr}_{a}"),
                        (-r * eps * eps / 4.0).exp(),
                    );
                    let c = 0.5;
                    let p_over =
                        zgt.iter().filter(|&&z| z >= c * ez).count() as f64 / n.max(1.0);
                    metrics.insert(format!("p_overshoot_c0.5_r{rr}_{a}"), p_over);
                    metrics.insert(
                        format!("prob_bound_c0.5_r{rr}_{a}"),
                        (1.0 / c) * (-r * eps * eps / 4.0).exp(),
                    );
                }
            }
        }
        ExperimentKind::PairCount => {
            for p in cfg.alpha_params()? {
                let a = compact_f64(p.alpha());
                let eps = cfg.eps_for(&p);
                let log_ez = expected_high_points_exact(&p, cfg.t)?;
                metrics.insert(format!("eps_{a}"), eps);
                for &r in &cfg.r_grid {
                    let rr = compact_f64(r);
                    let pairs = column(&rows, &format!("pairs_r{rr}_{a}"));
                    let n = pairs.len() as f64;
                    let mean = pairs.iter().sum::<f64>() / n.max(1.0);
                    let bound_cfg =
                        PairBoundConfig::new(p, eps, r, cfg.t, cfg.quadrature)?;
                    let log_bound = pair_count_bound(&bound_cfg)?;
                    metrics.insert(format!("mc_mean_pairs_r{rr}_{a}"), mean);
                    metrics.insert(format!("log_pair_bound_r{rr}_{a}"), log_bound);
                    metrics.insert(format!("pair_bound_r{rr}_{a}"), log_bound.exp());
                    metrics.insert(
                        format!("normalized_pairs_r{rr}_{a}"),
                        mean / (2.0 * log_ez).exp(),
                    );
                }
            }
        }
        ExperimentKind::RemCollapse => {
            let sigma1 = cfg.sigma1.expect("validated");
            let sigma2 = (2.0 - sigma1 * sigma1).sqrt();
            metrics.insert("sigma1".into(), sigma1);
            metrics.insert("sigma2".into(), sigma2);
            let mut med_fwd = Vec::new();
            let mut med_swp = Vec::new();
            for &t in &cfg.t_grid {
                let tt = compact_f64(t);
                let fwd = median(&column(&rows, &format!("max_fwd_t{tt}")));
                let swp = median(&column(&rows, &format!("max_swp_t{tt}")));
                metrics.insert(format!("median_max_fwd_t{tt}"), fwd);
                metrics.insert(format!("median_max_swp_t{tt}"), swp);
                metrics.insert(
                    format!("median_gap_t{tt}"),
                    median(&column(&rows, &format!("gap_t{tt}"))),
                );
                metrics.insert(
                    format!("median_max_kpp_fwd_t{tt}"),
                    median(&column(&rows, &format!("max_kpp_fwd_t{tt}"))),
                );
                med_fwd.push(fwd);
                med_swp.push(swp);
            }
            if cfg.t_grid.len() >= 2 {
                metrics.insert("slope_fwd".into(), ols_slope(&cfg.t_grid, &med_fwd));
                metrics.insert("slope_swp".into(), ols_slope(&cfg.t_grid, &med_swp));
            }
        }
        ExperimentKind::Trace => {
            for p in cfg.alpha_params()? {
                let a = compact_f64(p.alpha());
                for &t in &cfg.checkpoints {
                    if t > 0.0 {
                        metrics.insert(
                            format!("log_ez_t{}_{a}", compact_f64(t)),
                            expected_high_points_exact(&p, t)?,
                        );
                    }
                }
            }
        }
    }

    Ok(AggregateReport {
        experiment: cfg.kind.name().to_string(),
        config: cfg.to_echo(),
        rows,
        aggregates,
        metrics,
        decay_fit,
        failures,
        seed: cfg.seed,
        wallclock_ms,
    })
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

fn sim_config(cfg: &ExperimentConfig, horizon: f64, checkpoints: Vec<f64>, id: u64) -> Result<SimConfig> {
    Ok(SimConfig::new(horizon, checkpoints, cfg.seed)?
        .with_replica(id)
        .with_max_particles(cfg.max_particles)?)
}

/// Theorem-level SLLN check: per replica the ratio
/// `ρ = Z_α(t) / (E Z_α(t) · Y_α(t))` plus the pair `(Z/EZ, Y_α(r))`.
pub fn run_slln(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    cfg.validate()?;
    let start = Instant::now();
    let params = cfg.alpha_params()?;
    let r = cfg.r_grid[0];
    let profile = VarianceProfile::constant(1.0, cfg.t)?;
    let log_ez: Vec<f64> = params
        .iter()
        .map(|p| expected_high_points_exact(p, cfg.t))
        .collect::<Result<_>>()?;

    let (rows, failures) = run_rows(cfg, |id| {
        let sim = sim_config(cfg, cfg.t, vec![r, cfg.t], id)?;
        let snaps = simulate(&sim, &profile)?;
        let (snap_r, snap_t) = (&snaps[0], &snaps[1]);
        let mut values = BTreeMap::new();
        for (p, &lez) in params.iter().zip(&log_ez) {
            let a = compact_f64(p.alpha());
            let y_r = mckean_martingale(snap_r, p);
            let y_t = mckean_martingale(snap_t, p);
            let z = high_point_count(snap_t, p) as f64;
            let z_norm = z / lez.exp();
            values.insert(format!("y_r_{a}"), y_r);
            values.insert(format!("y_t_{a}"), y_t);
            values.insert(format!("z_{a}"), z);
            values.insert(format!("z_norm_{a}"), z_norm);
            values.insert(format!("rho_{a}"), z_norm / y_t);
        }
        Ok(values)
    })?;
    finalize(cfg, rows, failures, start.elapsed().as_secs_f64() * 1e3)
}

/// Onset of McKean's martingale: simulate only to `r` and compare the
/// analytic conditional expectation against `E Z_α(t) · Y_α(r)`.
pub fn run_onset(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    cfg.validate()?;
    let start = Instant::now();
    let params = cfg.alpha_params()?;
    let r = cfg.r_grid[0];
    let profile = VarianceProfile::constant(1.0, r)?;
    let log_ez: Vec<f64> = params
        .iter()
        .map(|p| expected_high_points_exact(p, cfg.t))
        .collect::<Result<_>>()?;

    let (rows, failures) = run_rows(cfg, |id| {
        let sim = sim_config(cfg, r, vec![r], id)?;
        let snaps = simulate(&sim, &profile)?;
        let snap_r = &snaps[0];
        let mut values = BTreeMap::new();
        for (p, &lez) in params.iter().zip(&log_ez) {
            let a = compact_f64(p.alpha());
            let y_r = mckean_martingale(snap_r, p);
            let log_cond = conditional_expected_count(snap_r, p, cfg.t)?;
            let ratio = (log_cond - lez).exp() / y_r;
            values.insert(format!("y_r_{a}"), y_r);
            values.insert(format!("onset_ratio_{a}"), ratio);
            values.insert(format!("onset_absdev_{a}"), (ratio - 1.0).abs());
        }
        Ok(values)
    })?;
    finalize(cfg, rows, failures, start.elapsed().as_secs_f64() * 1e3)
}

/// Remainder decay: `D_r = (Z_α(t) − E[Z_α(t)|F_r]) / E Z_α(t)` on the same
/// run across the whole `r` grid, plus a κ̂ decay fit of `Var D_r`.
pub fn run_decorrelation(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    cfg.validate()?;
    let start = Instant::now();
    let params = cfg.alpha_params()?;
    let profile = VarianceProfile::constant(1.0, cfg.t)?;
    let mut checkpoints = cfg.r_grid.clone();
    checkpoints.push(cfg.t);
    let log_ez: Vec<f64> = params
        .iter()
        .map(|p| expected_high_points_exact(p, cfg.t))
        .collect::<Result<_>>()?;

    let (rows, failures) = run_rows(cfg, |id| {
        let sim = sim_config(cfg, cfg.t, checkpoints.clone(), id)?;
        let snaps = simulate(&sim, &profile)?;
        let snap_t = snaps.last().expect("horizon snapshot");
        let mut values = BTreeMap::new();
        for (p, &lez) in params.iter().zip(&log_ez) {
            let a = compact_f64(p.alpha());
            let z_norm = high_point_count(snap_t, p) as f64 / lez.exp();
            values.insert(format!("z_{a}"), high_point_count(snap_t, p) as f64);
            for (snap_r, &r) in snaps.iter().zip(&cfg.r_grid) {
                let log_cond = conditional_expected_count(snap_r, p, cfg.t)?;
                let d = z_norm - (log_cond - lez).exp();
                values.insert(format!("d_r{}_{a}", compact_f64(r)), d);
            }
        }
        Ok(values)
    })?;
    finalize(cfg, rows, failures, start.elapsed().as_secs_f64() * 1e3)
}

/// Overshoot counts `Z_α^>` across a barrier-start grid, against the
/// localization bound. One simulation per (replica, alpha, r); the shared
/// checkpoint schedule keeps all `r` runs of a replica path-coupled, so the
/// overshoot count is non-increasing in `r` path by path.
pub fn run_localization(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    cfg.validate()?;
    let start = Instant::now();
    let params = cfg.alpha_params()?;
    let profile = VarianceProfile::constant(1.0, cfg.t)?;
    let mut checkpoints = cfg.r_grid.clone();
    checkpoints.push(cfg.t);

    let (rows, failures) = run_rows(cfg, |id| {
        let mut values = BTreeMap::new();
        for p in &params {
            let a = compact_f64(p.alpha());
            let slope = p.delta() + cfg.eps_for(p);
            for &r in &cfg.r_grid {
                let sim = sim_config(cfg, cfg.t, checkpoints.clone(), id)?.with_barrier(
                    BarrierSpec {
                        start_time: r,
                        slope,
                    },
                )?;
                let snaps = simulate(&sim, &profile)?;
                let snap_t = snaps.last().expect("horizon snapshot");
                let (z_le, z_gt) = localized_counts(snap_t, p)?;
                let rr = compact_f64(r);
                values.insert(format!("z_le_r{rr}_{a}"), z_le as f64);
                values.insert(format!("z_gt_r{rr}_{a}"), z_gt as f64);
                values.insert(format!("z_{a}"), (z_le + z_gt) as f64);
            }
        }
        Ok(values)
    })?;
    finalize(cfg, rows, failures, start.elapsed().as_secs_f64() * 1e3)
}

/// Unordered same-ancestor pairs among barrier-respecting high points,
/// against the two-point quadrature bound.
pub fn run_pair_count(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    cfg.validate()?;
    let start = Instant::now();
    let params = cfg.alpha_params()?;
    let profile = VarianceProfile::constant(1.0, cfg.t)?;
    let mut checkpoints = cfg.r_grid.clone();
    checkpoints.push(cfg.t);

    let (rows, failures) = run_rows(cfg, |id| {
        let mut values = BTreeMap::new();
        for p in &params {
            let a = compact_f64(p.alpha());
            let slope = p.delta() + cfg.eps_for(p);
            let thr = p.threshold(cfg.t);
            for &r in &cfg.r_grid {
                let sim = sim_config(cfg, cfg.t, checkpoints.clone(), id)?.with_barrier(
                    BarrierSpec {
                        start_time: r,
                        slope,
                    },
                )?;
                let snaps = simulate(&sim, &profile)?;
                let snap_t = snaps.last().expect("horizon snapshot");
                let flags = snap_t.barrier_flags()?;
                let contributes: Vec<bool> = snap_t
                    .positions
                    .iter()
                    .zip(flags)
                    .map(|(&x, &crossed)| x >= thr && !crossed)
                    .collect();
                let groups = split_by_ancestor(snap_t, r)?;
                let mut pairs = 0u64;
                let mut z_le = 0u64;
                for group in &groups {
                    let m = group.iter().filter(|&&k| contributes[k]).count() as u64;
                    z_le += m;
                    pairs += m * (m.saturating_sub(1)) / 2;
                }
                let rr = compact_f64(r);
                values.insert(format!("pairs_r{rr}_{a}"), pairs as f64);
                values.insert(format!("z_le_r{rr}_{a}"), z_le as f64);
            }
        }
        Ok(values)
    })?;
    finalize(cfg, rows, failures, start.elapsed().as_secs_f64() * 1e3)
}

/// Two-phase speed orderings with paired seeds: medians of the max under
/// `(σ1, σ2)` and the swapped ordering, plus slope fits over the `t` grid.
pub fn run_rem_collapse(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    cfg.validate()?;
    let start = Instant::now();
    let sigma1 = cfg.sigma1.expect("validated");
    let sigma2 = (2.0 - sigma1 * sigma1).sqrt();

    let (rows, failures) = run_rows(cfg, |id| {
        let mut values = BTreeMap::new();
        for &t in &cfg.t_grid {
            let tt = compact_f64(t);
            let fwd_profile = VarianceProfile::two_phase(sigma1 * sigma1, sigma2 * sigma2, t)?;
            let swp_profile = VarianceProfile::two_phase(sigma2 * sigma2, sigma1 * sigma1, t)?;
            let sim = sim_config(cfg, t, vec![t], id)?;
            let max_fwd = simulate(&sim, &fwd_profile)?[0].max_position();
            let max_swp = simulate(&sim, &swp_profile)?[0].max_position();
            values.insert(format!("max_fwd_t{tt}"), max_fwd);
            values.insert(format!("max_swp_t{tt}"), max_swp);
            values.insert(format!("gap_t{tt}"), max_fwd - max_swp);
            values.insert(format!("max_kpp_fwd_t{tt}"), max_fwd - centering_kpp(t)?);
            values.insert(format!("max_rem_fwd_t{tt}"), max_fwd - centering_rem(t)?);
        }
        Ok(values)
    })?;
    finalize(cfg, rows, failures, start.elapsed().as_secs_f64() * 1e3)
}

/// Report plus the raw per-replica traces of a `trace` run.
#[derive(Debug, Clone)]
pub struct TraceRun {
    pub report: AggregateReport,
    /// One trace per completed replica, ascending replica id.
    pub traces: Vec<MartingaleTrace>,
}

/// Full traces of `Z(t)`, `Y_α(t)` and `Z_α(t)/E Z_α(t)` over the checkpoint
/// grid, with per-checkpoint aggregates.
pub fn run_martingale_trace(cfg: &ExperimentConfig) -> Result<TraceRun> {
    cfg.validate()?;
    let start = Instant::now();
    let params = cfg.alpha_params()?;
    let horizon = *cfg.checkpoints.last().expect("validated non-empty");
    let profile = VarianceProfile::constant(1.0, horizon)?;
    // An optional barrier (slope from the first alpha) feeds the localized
    // count columns of the trace.
    let barrier = cfg.r_grid.first().map(|&r| BarrierSpec {
        start_time: r,
        slope: params[0].delta() + cfg.eps_for(&params[0]),
    });

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers())
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let ids: Vec<u64> = (cfg.replica_start..cfg.replica_start + cfg.replicas).collect();
    type TraceOutcome = Result<(BTreeMap<String, f64>, MartingaleTrace)>;
    let outcomes: Vec<(u64, TraceOutcome)> = pool.install(|| {
        ids.par_iter()
            .map(|&id| {
                let run = || -> TraceOutcome {
                    let mut sim = sim_config(cfg, horizon, cfg.checkpoints.clone(), id)?;
                    if let Some(b) = barrier {
                        sim = sim.with_barrier(b)?;
                    }
                    let snaps = simulate(&sim, &profile)?;
                    let trace = MartingaleTrace::from_snapshots(&snaps, &params);
                    let mut values = BTreeMap::new();
                    for (c, snap) in snaps.iter().enumerate() {
                        let tt = compact_f64(snap.time);
                        values.insert(format!("n_t{tt}"), snap.len() as f64);
                        values.insert(format!("z_deriv_t{tt}"), derivative_martingale(snap));
                        for p in &params {
                            let a = compact_f64(p.alpha());
                            let y = mckean_martingale(snap, p);
                            values.insert(format!("y_t{tt}_{a}"), y);
                            if snap.time > 0.0 {
                                let lez = expected_high_points_exact(p, snap.time)?;
                                values.insert(
                                    format!("z_norm_t{tt}_{a}"),
                                    high_point_count(snap, p) as f64 / lez.exp(),
                                );
                            }
                            if c > 0 {
                                let prev = compact_f64(snaps[c - 1].time);
                                let y_prev = values[&format!("y_t{prev}_{a}")];
                                values.insert(format!("y_inc_t{prev}_t{tt}_{a}"), y - y_prev);
                            }
                        }
                    }
                    Ok((values, trace))
                };
                (id, run())
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut traces = Vec::new();
    for (id, outcome) in outcomes {
        match outcome {
            Ok((values, trace)) => {
                rows.push(ReplicaRow {
                    replica_id: id,
                    values,
                });
                traces.push(trace);
            }
            Err(e @ Error::PopulationCap { .. }) => failures.push(FailureRecord {
                replica_id: id,
                message: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    let report = finalize(cfg, rows, failures, start.elapsed().as_secs_f64() * 1e3)?;
    Ok(TraceRun { report, traces })
}
