//! Calibration pilot: runs the acceptance-scale experiments at 3x the
//! replica count to freeze tolerance bands. Pilot seed: 271828.

use bbm_core::experiments::{run, ExperimentConfig, ExperimentKind};

const PILOT_SEED: u64 = 271828;

fn main() {
    // Criterion 7 pilot: SLLN at t=14 and t=10, 600 replicas.
    for t in [10.0, 14.0] {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Slln, t, PILOT_SEED);
        cfg.r_grid = vec![7.0_f64.min(t / 2.0)];
        cfg.alphas = vec![1.0];
        cfg.replicas = 600;
        let rep = run(&cfg).unwrap();
        println!(
            "slln t={t}: median_rho={:.4} iqr_rho={:.4} corr={:.4} fails={}",
            rep.metrics["median_rho_1"],
            rep.metrics["iqr_rho_1"],
            rep.metrics["corr_znorm_yr_1"],
            rep.failures.len()
        );
    }

    // Criterion 8 pilot: decorrelation at t=12, 900 replicas.
    let mut cfg = ExperimentConfig::new(ExperimentKind::Decorrelation, 12.0, PILOT_SEED);
    cfg.r_grid = vec![2.0, 4.0, 6.0];
    cfg.alphas = vec![1.0];
    cfg.replicas = 900;
    let rep = run(&cfg).unwrap();
    println!(
        "decorr t=12: var(2)={:.5} var(4)={:.5} var(6)={:.5} kappa={:.4} ci=({:.4},{:.4})",
        rep.metrics["var_d_r2_1"],
        rep.metrics["var_d_r4_1"],
        rep.metrics["var_d_r6_1"],
        rep.metrics["kappa_1"],
        rep.metrics["kappa_ci_lo_1"],
        rep.metrics["kappa_ci_hi_1"]
    );

    // Criterion 9 pilot: localization at t=10.
    let mut cfg = ExperimentConfig::new(ExperimentKind::Localization, 10.0, PILOT_SEED);
    cfg.r_grid = vec![2.0, 4.0, 6.0];
    cfg.alphas = vec![1.0];
    cfg.eps = Some(0.0872);
    cfg.replicas = 1200;
    let rep = run(&cfg).unwrap();
    for r in ["2", "4", "6"] {
        println!(
            "localization r={r}: ratio={:.5} bound={:.5}",
            rep.metrics[&format!("overshoot_ratio_r{r}_1")],
            rep.metrics[&format!("bound_ratio_r{r}_1")]
        );
    }

    // Criterion 10 pilot: pair counts at t=10.
    let mut cfg = ExperimentConfig::new(ExperimentKind::PairCount, 10.0, PILOT_SEED);
    cfg.r_grid = vec![2.0, 4.0];
    cfg.alphas = vec![1.0];
    cfg.eps = Some(0.0872);
    cfg.replicas = 1200;
    let rep = run(&cfg).unwrap();
    for r in ["2", "4"] {
        println!(
            "pairs r={r}: mc_mean={:.1} bound={:.1} normalized={:.3e}",
            rep.metrics[&format!("mc_mean_pairs_r{r}_1")],
            rep.metrics[&format!("pair_bound_r{r}_1")],
            rep.metrics[&format!("normalized_pairs_r{r}_1")]
        );
    }

    // Criterion 6 pilot: onset at r=6 over the t grid.
    for t in [100.0, 300.0, 1000.0] {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Onset, t, PILOT_SEED);
        cfg.r_grid = vec![6.0];
        cfg.alphas = vec![1.0];
        cfg.replicas = 6000;
        let rep = run(&cfg).unwrap();
        println!("onset t={t}: median|R-1|={:.5}", rep.metrics["median_absdev_1"]);
    }

    // Criterion 12 pilot: REM collapse, 900 replicas (the expensive one).
    let mut cfg = ExperimentConfig::new(ExperimentKind::RemCollapse, 14.0, PILOT_SEED);
    cfg.sigma1 = Some(0.6);
    cfg.t_grid = vec![8.0, 11.0, 14.0];
    cfg.replicas = 900;
    cfg.alphas = vec![];
    let rep = run(&cfg).unwrap();
    println!(
        "rem s1=0.6: gap14={:.3} slope_fwd={:.4} slope_swp={:.4} (targets 1.4142 / 1.3298)",
        rep.metrics["median_gap_t14"],
        rep.metrics["slope_fwd"],
        rep.metrics["slope_swp"]
    );
    for t in ["8", "11", "14"] {
        println!(
            "rem s1=0.6 medians t={t}: fwd={:.4} swp={:.4}",
            rep.metrics[&format!("median_max_fwd_t{t}")],
            rep.metrics[&format!("median_max_swp_t{t}")]
        );
    }

    // Homogeneous band: sigma1 = sigma2 = 1.
    let mut cfg = ExperimentConfig::new(ExperimentKind::RemCollapse, 14.0, PILOT_SEED);
    cfg.sigma1 = Some(1.0);
    cfg.t_grid = vec![8.0, 11.0, 14.0];
    cfg.replicas = 900;
    cfg.alphas = vec![];
    let rep = run(&cfg).unwrap();
    for t in ["8", "11", "14"] {
        println!(
            "homog medians t={t}: max-m(t) = {:.4}",
            rep.metrics[&format!("median_max_kpp_fwd_t{t}")]
        );
    }
}
