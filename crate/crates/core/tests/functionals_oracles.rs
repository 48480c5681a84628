//! Frozen-oracle values (40-digit mpmath evaluations of the defining
//! formulas) and property-based invariants for the snapshot functionals.

use approx::assert_relative_eq;
use bbm_core::functionals::{
    centering_kpp, centering_rem, derivative_martingale, high_point_count, localized_counts,
    mckean_martingale, mckean_martingale_sigma, recentered_max, Centering, MartingaleTrace,
    SQRT_2,
};
use bbm_core::{AlphaParams, ParticleSnapshot};
use proptest::prelude::*;

fn snapshot(time: f64, positions: Vec<f64>, flags: Option<Vec<bool>>) -> ParticleSnapshot {
    ParticleSnapshot {
        time,
        positions,
        ancestor_checkpoints: vec![],
        ancestors: vec![],
        barrier_exceeded: flags,
        seed: 0,
        replica_id: 0,
    }
}

#[test]
fn centerings_match_oracle_values() {
    assert_relative_eq!(centering_kpp(1.0).unwrap(), SQRT_2, max_relative = 1e-15);
    assert_relative_eq!(
        centering_kpp(100.0).unwrap(),
        136.53683563676406,
        max_relative = 1e-12
    );
    assert_relative_eq!(
        centering_kpp(std::f64::consts::E).unwrap(),
        2.7835708563792955,
        max_relative = 1e-12
    );
    assert_relative_eq!(centering_rem(1.0).unwrap(), SQRT_2, max_relative = 1e-15);
    assert_relative_eq!(
        centering_rem(100.0).unwrap(),
        139.79318270379436,
        max_relative = 1e-12
    );
    assert_relative_eq!(
        centering_rem(std::f64::consts::E).unwrap(),
        3.4906776375658431,
        max_relative = 1e-12
    );
    // log t < 0 is fine below t = 1; only t <= 0 is out of domain.
    assert!(centering_kpp(0.5).unwrap() < 0.5 * SQRT_2 + 1.0);
    for t in [0.0, -1.0] {
        assert!(centering_kpp(t).is_err());
        assert!(centering_rem(t).is_err());
    }
}

#[test]
fn derivative_martingale_oracle_values() {
    // Root particle: zero prefactor.
    assert_eq!(derivative_martingale(&snapshot(0.0, vec![0.0], None)), 0.0);
    // A particle exactly at sqrt(2) t contributes nothing.
    let t = 3.0;
    assert_eq!(
        derivative_martingale(&snapshot(t, vec![SQRT_2 * t], None)),
        0.0
    );
    // t = 1, particles {0, sqrt(2)}: sqrt(2) e^{-2}.
    assert_relative_eq!(
        derivative_martingale(&snapshot(1.0, vec![0.0, SQRT_2], None)),
        0.19139299302082185,
        max_relative = 1e-13
    );
    // Signed sum: a particle above sqrt(2) t pushes negative.
    let z = derivative_martingale(&snapshot(1.0, vec![SQRT_2 + 1.0], None));
    assert!(z < 0.0);
}

#[test]
fn mckean_martingale_oracle_values() {
    let root = snapshot(0.0, vec![0.0], None);
    for alpha in [0.3, 0.9, 1.3] {
        let p = AlphaParams::new(alpha).unwrap();
        assert_eq!(mckean_martingale(&root, &p), 1.0);
    }
    // t = 1, alpha = 1, one particle at 2.
    let p = AlphaParams::new(1.0).unwrap();
    assert_relative_eq!(
        mckean_martingale(&snapshot(1.0, vec![2.0], None), &p),
        0.77309038252186911,
        max_relative = 1e-13
    );
    // Doubling the particle list doubles the sum.
    let single = snapshot(2.0, vec![0.3, -1.0], None);
    let double = snapshot(2.0, vec![0.3, -1.0, 0.3, -1.0], None);
    assert_relative_eq!(
        mckean_martingale(&double, &p),
        2.0 * mckean_martingale(&single, &p),
        max_relative = 1e-15
    );
}

#[test]
fn mckean_sigma_form_oracle_values() {
    // t = 1, sigma1 = 0.5, particle at sqrt(2): exp(-0.25).
    assert_relative_eq!(
        mckean_martingale_sigma(&snapshot(1.0, vec![SQRT_2], None), 0.5).unwrap(),
        0.77880078307140487,
        max_relative = 1e-13
    );
    assert_eq!(
        mckean_martingale_sigma(&snapshot(0.0, vec![0.0], None), 0.25).unwrap(),
        1.0
    );
    for bad in [0.0, 1.0, -0.5, 1.5] {
        assert!(mckean_martingale_sigma(&snapshot(0.0, vec![0.0], None), bad).is_err());
    }
}

#[test]
fn matching_identity_is_bitwise() {
    let snap = snapshot(3.0, vec![-2.0, 0.5, 3.9, 4.2], None);
    for sigma1 in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let p = AlphaParams::from_sigma1(sigma1).unwrap();
        let via_sigma = mckean_martingale_sigma(&snap, sigma1).unwrap();
        let via_alpha = mckean_martingale(&snap, &p);
        assert_eq!(via_sigma.to_bits(), via_alpha.to_bits(), "sigma1={sigma1}");
    }
}

#[test]
fn high_point_threshold_is_inclusive() {
    let p = AlphaParams::new(1.0).unwrap();
    // t = 0: threshold 0, root at 0 counts.
    assert_eq!(high_point_count(&snapshot(0.0, vec![0.0], None), &p), 1);
    // t = 2, threshold 2 Δ ≈ 0.8284: exactly one of {1.0, 0.5, -0.3}.
    let snap = snapshot(2.0, vec![1.0, 0.5, -0.3], None);
    assert_eq!(high_point_count(&snap, &p), 1);
    // Boundary value included.
    let boundary = snapshot(2.0, vec![p.threshold(2.0)], None);
    assert_eq!(high_point_count(&boundary, &p), 1);
}

#[test]
fn localized_counts_need_flags_and_split_the_total() {
    let p = AlphaParams::new(1.0).unwrap();
    let no_flags = snapshot(2.0, vec![1.0, 2.0], None);
    assert!(matches!(
        localized_counts(&no_flags, &p),
        Err(bbm_core::Error::MissingBarrierFlags)
    ));
    let snap = snapshot(
        2.0,
        vec![1.0, 2.0, 0.5, 0.9],
        Some(vec![true, false, true, false]),
    );
    // Threshold 2Δ ≈ 0.8284: high points are 1.0 (crossed), 2.0 and 0.9.
    let (le, gt) = localized_counts(&snap, &p).unwrap();
    assert_eq!((le, gt), (2, 1));
    assert_eq!(le + gt, high_point_count(&snap, &p));
}

#[test]
fn recentered_max_oracle_values() {
    let snap = snapshot(std::f64::consts::E, vec![1.0, 2.0, 3.0], None);
    assert_eq!(recentered_max(&snap, Centering::None).unwrap(), 3.0);
    assert_relative_eq!(
        recentered_max(&snap, Centering::Kpp).unwrap(),
        3.0 - 2.7835708563792955,
        max_relative = 1e-12
    );
    let zero = snapshot(0.0, vec![0.0], None);
    assert_eq!(recentered_max(&zero, Centering::None).unwrap(), 0.0);
    assert!(recentered_max(&zero, Centering::Kpp).is_err());
    assert!(recentered_max(&zero, Centering::Rem).is_err());
}

#[test]
fn alpha_params_derivations() {
    let p = AlphaParams::new(1.0).unwrap();
    assert_eq!(p.delta(), SQRT_2 - 1.0);
    assert_eq!(p.sigma1(), (SQRT_2 - 1.0) / SQRT_2);
    assert!(p.sq_integrable());
    assert!(!AlphaParams::new(0.2).unwrap().sq_integrable()); // Δ = 1.214
    for bad in [0.0, -1.0, SQRT_2, 2.0] {
        assert!(AlphaParams::new(bad).is_err());
    }
}

#[test]
fn trace_csv_layout() {
    let snaps = vec![
        snapshot(1.0, vec![0.4], Some(vec![false])),
        snapshot(2.0, vec![1.0, -0.2], Some(vec![true, false])),
    ];
    let params = vec![AlphaParams::new(0.6).unwrap(), AlphaParams::new(1.0).unwrap()];
    let trace = MartingaleTrace::from_snapshots(&snaps, &params);
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "time,n,max,z_derivative,y_alpha_0.6,count_0.6,count_le_0.6,count_gt_0.6,\
         y_alpha_1,count_1,count_le_1,count_gt_1,max_kpp,max_rem"
    );
    assert_eq!(lines.count(), 2);
    // Counts split consistently.
    for (a, _) in params.iter().enumerate() {
        for c in 0..trace.times.len() {
            assert_eq!(
                trace.count[a][c],
                trace.count_le[a][c] + trace.count_gt[a][c]
            );
        }
    }
}

proptest! {
    /// Count additivity: the localized split always sums to the count.
    #[test]
    fn prop_count_additivity(
        time in 0.0..12.0f64,
        particles in prop::collection::vec((-20.0..20.0f64, any::<bool>()), 1..40),
        alpha in 0.05..1.40f64,
    ) {
        let (positions, flags): (Vec<f64>, Vec<bool>) = particles.into_iter().unzip();
        let snap = snapshot(time, positions, Some(flags));
        let p = AlphaParams::new(alpha).unwrap();
        let (le, gt) = localized_counts(&snap, &p).unwrap();
        prop_assert_eq!(le + gt, high_point_count(&snap, &p));
    }

    /// A larger alpha lowers the threshold Δ_α t, so the count never drops.
    #[test]
    fn prop_count_monotone_in_alpha(
        time in 0.0..12.0f64,
        positions in prop::collection::vec(-20.0..20.0f64, 1..40),
        lo in 0.05..1.0f64,
        bump in 0.01..0.4f64,
    ) {
        let snap = snapshot(time, positions, None);
        let p_lo = AlphaParams::new(lo).unwrap();
        let p_hi = AlphaParams::new(lo + bump).unwrap();
        prop_assert!(high_point_count(&snap, &p_hi) >= high_point_count(&snap, &p_lo));
    }

    /// Raw max reconstructs from the centered max.
    #[test]
    fn prop_recentering_reconstruction(
        time in 0.01..50.0f64,
        positions in prop::collection::vec(-30.0..30.0f64, 1..30),
    ) {
        let snap = snapshot(time, positions, None);
        let raw = recentered_max(&snap, Centering::None).unwrap();
        let kpp = recentered_max(&snap, Centering::Kpp).unwrap();
        prop_assert!((raw - (kpp + centering_kpp(time).unwrap())).abs() <= 1e-9 * raw.abs().max(1.0));
    }

    /// The matching identity holds bit-for-bit for arbitrary snapshots.
    #[test]
    fn prop_matching_identity(
        time in 0.0..10.0f64,
        positions in prop::collection::vec(-15.0..15.0f64, 1..30),
        sigma1 in 0.02..0.98f64,
    ) {
        let snap = snapshot(time, positions, None);
        let p = AlphaParams::from_sigma1(sigma1).unwrap();
        let a = mckean_martingale_sigma(&snap, sigma1).unwrap();
        let b = mckean_martingale(&snap, &p);
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}
