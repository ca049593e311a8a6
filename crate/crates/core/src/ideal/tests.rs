use super::*;
use crate::learners::CurveFamily;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(r: f64, b: u64, n_full: u64, delta: f64) -> DaubConfig {
    DaubConfig::new(r, b, n_full, delta, 1).unwrap()
}

#[test]
fn n_star_examples() {
    assert_eq!(compute_n_star(|l| 0.9 - 0.001 * l as f64, 0.85, 1000), 51);
    assert_eq!(compute_n_star(|_| 0.9, 0.85, 1000), 1000);
    // Non-monotone u: the first crossing counts even if u recovers for a while.
    let dip = |l: u64| match l {
        7 => 0.1,
        900.. => 0.8,
        _ => 0.9,
    };
    assert_eq!(compute_n_star(dip, 0.85, 1000), 7);
    // u(N) >= f* wins regardless of earlier dips.
    assert_eq!(
        compute_n_star(|l| if l == 7 { 0.1 } else { 0.9 }, 0.85, 1000),
        1000
    );
}

#[test]
fn n_star_of_inverse_curve_by_scan() {
    let spec = SyntheticCurveSpec::inverse(0.95, 500.0);
    let n_full = 10_000;
    // The curve is clamped at zero up to n = 500; treat that stretch as unbounded.
    let u = |l: u64| {
        if l <= 527 {
            1.0
        } else {
            ideal_bound(|n| spec.exact_accuracy(n), Some(1.0), l, n_full, 1).unwrap()
        }
    };
    assert_eq!(compute_n_star(u, 0.94, n_full), 5280);
}

#[test]
fn n_delta_examples() {
    assert_eq!(compute_n_delta(|_| 0.5, 0.01, 1000, 1), 2);
    assert_eq!(compute_n_delta(|_| 0.5, 0.01, 1000, 3), 4);
    let steep = |n: u64| 0.1 + n as f64 * 2e-5;
    assert_eq!(compute_n_delta(steep, 0.01, 1000, 1), 1000);
    // f(n) = 1 - c delta / n with c = 100, N = 10^4, delta = 0.05:
    // the backward difference crosses delta / N once n (n - 1) >= c N.
    let f = |n: u64| 1.0 - 100.0 * 0.05 / n as f64;
    let n_delta = compute_n_delta(f, 0.05, 10_000, 1);
    assert_eq!(n_delta, 1001);
    assert!(n_delta.abs_diff(1000) <= 2);
}

#[test]
fn flat_and_linear_thresholds_in_a_problem() {
    let specs = vec![
        SyntheticCurveSpec::inverse(0.9, 0.5),
        SyntheticCurveSpec::flat(0.5),
    ];
    let problem = IdealProblem::new(specs, config(2.0, 10, 1280, 0.05)).unwrap();
    let t = problem.thresholds();
    assert_eq!(t[1].n_delta, 2);
    assert!(t[1].suboptimal && !t[0].suboptimal);
    // Bound 0.5 from the horizon on, below f* = 0.9 - 0.5/1280.
    assert_eq!(t[1].n_star, 40);
    assert_eq!(t[0].n_star, 1280);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn n_delta_tracks_sqrt_cn(c in 1.0f64..500.0, n_full in 1000u64..200_000, s in 1u64..4) {
        let delta = 0.01;
        prop_assume!((c * n_full as f64).sqrt() <= n_full as f64);
        let f = |n: u64| 1.0 - c * delta / n as f64;
        let got = compute_n_delta(f, delta, n_full, s);
        let root = (c * n_full as f64).sqrt();
        prop_assert!((got as f64 - root).abs() <= (s + 1) as f64, "scan {got} vs root {root}");
    }

    #[test]
    fn projected_bound_is_nonincreasing_for_well_behaved_curves(
        a in 0.5f64..1.0,
        frac in 0.01f64..1.0,
        alpha in 0.2f64..2.0,
        inverse in any::<bool>(),
        n_full in 500u64..5000,
    ) {
        let c = a * frac;
        let spec = if inverse {
            SyntheticCurveSpec::inverse(a, c)
        } else {
            SyntheticCurveSpec::power_law(a, c, alpha)
        };
        prop_assert!(well_behaved(|n| spec.exact_accuracy(n), 1, n_full).is_ok());
        let target = spec.exact_accuracy(n_full);
        let mut prev = f64::INFINITY;
        for l in 2..=n_full {
            let g = ideal_bound(|n| spec.exact_accuracy(n), None, l, n_full, 1).unwrap();
            prop_assert!(g <= prev + ACCURACY_SLACK);
            prop_assert!(g >= target - ACCURACY_SLACK);
            prev = g;
        }
    }
}

#[test]
fn ub_validity_on_inverse_curve() {
    let cfg = config(2.0, 200, 10_000, 0.01);
    let spec = SyntheticCurveSpec::inverse(1.0, 100.0);
    let v = verify_spec_ub(&spec, &cfg);
    assert!(v.passed, "{}", v.detail);
    // 10 / sqrt(n) covers f(N) - f(n) = 100/n - 0.01 from n = 200 on.
    let capped = spec.with_train_margin(10.0);
    assert!(verify_spec_ub(&capped, &cfg).passed);
    let too_tight = spec.with_train_margin(1.0);
    assert!(!verify_spec_ub(&too_tight, &cfg).passed);
}

#[test]
fn ub_validity_flags_convex_curve() {
    let n_full = 10_000;
    let bump = |n: u64| 0.5 + 0.3 * (n as f64 / n_full as f64).powi(2);
    assert!(well_behaved(bump, 1, n_full).is_err());
    let sizes = schedule(100, 2.0, n_full);
    let v = verify_ub_validity(bump, |_| None, &sizes, n_full, 1);
    assert!(!v.passed);
    assert!(v.detail.contains("n = 100"), "{}", v.detail);
}

fn schedule(b: u64, r: f64, n_full: u64) -> Vec<u64> {
    crate::scheduler::schedule_sizes(b, r, n_full).unwrap()
}

#[test]
fn ub_of_constant_curve_is_exact() {
    let n_full = 4000;
    let sizes = schedule(10, 2.0, n_full);
    for &n in &sizes {
        assert_eq!(ideal_bound(|_| 0.7, None, n, n_full, 1).unwrap(), 0.7);
    }
    assert!(verify_ub_validity(|_| 0.7, |_| None, &sizes, n_full, 1).passed);
}

#[test]
fn problem_rejects_invalid_pools() {
    let cfg = config(2.0, 10, 1280, 0.01);
    assert!(IdealProblem::new(vec![], cfg.clone()).is_err());
    let noisy = SyntheticCurveSpec::inverse(0.9, 0.5).with_noise(0.01);
    assert!(IdealProblem::new(vec![noisy], cfg.clone()).is_err());
    // Clamped at zero for n < 11, so the derivative jumps upward there.
    let clamped = SyntheticCurveSpec::inverse(0.95, 10.0);
    assert!(IdealProblem::new(vec![clamped], cfg.clone()).is_err());
    // Training accuracy dips below f(N) mid-range.
    let loose = SyntheticCurveSpec::inverse(0.9, 0.5).with_train_margin(0.0);
    assert!(IdealProblem::new(vec![loose], cfg.clone()).is_err());
    let wide_step = cfg.with_step(40).unwrap();
    assert!(IdealProblem::new(vec![SyntheticCurveSpec::flat(0.5)], wide_step).is_err());
}

#[test]
fn two_learner_daub_star_passes_every_check() {
    let specs = vec![
        SyntheticCurveSpec::inverse(0.95, 0.9),
        SyntheticCurveSpec::inverse(0.90, 0.9),
    ];
    let problem = IdealProblem::new(specs, config(2.0, 10, 10_240, 0.04)).unwrap();
    assert_eq!(problem.suboptimal(), [LearnerId(1)].into_iter().collect());
    assert_eq!(problem.i_star(), LearnerId(0));
    let out = run_daub_star(&problem).unwrap();
    assert!(out.passed(), "{:?}", out.failed().collect::<Vec<_>>());
    assert_eq!(out.report.selected, LearnerId(0));
    let checks: BTreeSet<&str> = out.verdicts.iter().map(|v| v.check.as_str()).collect();
    for name in [
        "step_below_r_nstar",
        "total_below_nstar_bound",
        "cost_within_nstar_bound",
        "nstar_at_most_ndelta",
        "cost_within_ndelta_bound",
        "selected_cost_overhead",
        "selected_optimal",
    ] {
        assert!(checks.contains(name), "missing {name}");
    }
    for t in &out.thresholds {
        assert!((1..=10_240).contains(&t.n_star) && (1..=10_240).contains(&t.n_delta));
    }
    let sub = out.thresholds[1];
    let total = out.report.sequence.total_allocated(LearnerId(1));
    assert!(
        exact::below_total_allocation_bound(total, 2.0, sub.n_star),
        "total {total}, n_star {}",
        sub.n_star
    );
    assert!(out.report.regret.unwrap() > 0.0);
    assert!(out.u_min_full <= problem.f_star());
}

#[test]
fn single_learner_has_no_regret() {
    let problem = IdealProblem::new(
        vec![SyntheticCurveSpec::power_law(0.9, 0.8, 0.5)],
        config(1.5, 4, 6245, 0.01),
    )
    .unwrap();
    let out = run_daub_star(&problem).unwrap();
    assert!(out.passed());
    assert_eq!(out.report.regret, Some(0.0));
    assert_eq!(out.report.loss, Some(0.0));
}

#[test]
fn cost_checks_use_the_learner_cost_model() {
    let specs = vec![
        SyntheticCurveSpec::inverse(0.95, 0.9).with_cost(2.0, 1.5),
        SyntheticCurveSpec::power_law(0.85, 0.8, 0.7).with_cost(1.0, 1.2),
        SyntheticCurveSpec::power_law(0.6, 0.5, 0.4).with_cost(3.0, 1.0),
    ];
    let problem = IdealProblem::new(specs, config(2.0, 8, 8192, 0.01)).unwrap();
    let out = run_daub_star(&problem).unwrap();
    assert!(out.passed(), "{:?}", out.failed().collect::<Vec<_>>());
    assert_eq!(out.report.selected, LearnerId(0));
}

#[test]
fn flat_suboptimal_learner_breaks_nstar_below_ndelta() {
    // A flat curve has f' = 0 from the first step, so n_delta = s + 1, but no
    // bound exists before the bootstrap horizon and n_star cannot be smaller.
    let specs = vec![
        SyntheticCurveSpec::inverse(0.95, 0.9),
        SyntheticCurveSpec::flat(0.6),
    ];
    let problem = IdealProblem::new(specs, config(2.0, 8, 8192, 0.01)).unwrap();
    let out = run_daub_star(&problem).unwrap();
    let failed: Vec<&str> = out.failed().map(|v| v.check.as_str()).collect();
    assert_eq!(failed, ["nstar_at_most_ndelta", "cost_within_ndelta_bound"]);
    assert_eq!(out.thresholds[1].n_star, 32);
    assert_eq!(out.thresholds[1].n_delta, 2);
    assert_eq!(out.report.selected, LearnerId(0));
}

#[test]
fn capped_full_size_can_exceed_the_overhead_bound() {
    // Sizes 10, 20, 40, 41: the last step is capped, so the geometric sum
    // argument no longer applies and 111 > 2 * 41.
    let problem = IdealProblem::new(
        vec![SyntheticCurveSpec::inverse(0.9, 0.5)],
        config(2.0, 10, 41, 0.01),
    )
    .unwrap();
    let out = run_daub_star(&problem).unwrap();
    assert_eq!(out.report.selected_cost, 111.0);
    let failed: Vec<&str> = out.failed().map(|v| v.check.as_str()).collect();
    assert_eq!(failed, ["selected_cost_overhead"]);
}

#[test]
fn lower_bound_example() {
    let g = gamma();
    assert!((g - 0.618_033_988_7).abs() < 1e-10);
    assert!((1.0 / d_constant() - (1.0 - g)).abs() < 1e-12);

    let inst = lower_bound_instance(0.05, 10_000, 100.0).unwrap();
    assert_eq!(inst.n_delta, 1001);
    assert_eq!(inst.split, 618);
    assert!(inst.passed(), "{:?}", inst.verdicts);
    let names: Vec<&str> = inst.verdicts.iter().map(|v| v.check.as_str()).collect();
    assert_eq!(
        names,
        [
            "gamma_condition",
            "prefix_identical",
            "final_gap",
            "both_well_behaved",
            "derivative_at_ndelta"
        ]
    );
    let gap = inst.optimal.value(10_000) - inst.suboptimal.value(10_000);
    assert!(gap >= 0.05 - ACCURACY_SLACK);
}

#[test]
fn lower_bound_pair_is_indistinguishable_up_to_the_split() {
    let inst = lower_bound_instance(0.05, 10_000, 100.0).unwrap();
    let early = [10, 20, 40, 80, 160, 320, 618];
    let (a, b) = inst.observe(&early);
    assert_eq!(a, b);
    let (a, b) = inst.observe(&[619]);
    assert_ne!(a, b);
}

#[test]
fn lower_bound_rejects_bad_parameters() {
    assert!(lower_bound_instance(0.0, 10_000, 100.0).is_err());
    assert!(lower_bound_instance(0.05, 10_000, -1.0).is_err());
    assert!(lower_bound_instance(0.05, 100, 1000.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lower_bound_instances_hold(
        delta in 0.005f64..0.1,
        n_full in 2_000u64..50_000,
        frac in 0.01f64..0.5,
    ) {
        // c up to a fraction of N keeps sqrt(c N) inside [1, N].
        let c = (n_full as f64 * frac).max(20.0);
        let inst = lower_bound_instance(delta, n_full, c).unwrap();
        prop_assert!(inst.passed(), "{:?}", inst.verdicts);
        prop_assert_eq!(inst.split, (gamma() * inst.n_delta as f64).floor() as u64);
    }
}

#[test]
fn regret_with_one_flat_learner_is_its_bootstrap() {
    let specs = [
        SyntheticCurveSpec::inverse(0.95, 0.5),
        SyntheticCurveSpec::flat(0.5),
    ];
    let rows = regret_trend(&specs, &[1_000, 10_000, 100_000], 10, 2.0, 0.01, 1).unwrap();
    for row in &rows {
        assert_eq!(row.regret, 70.0);
        assert_eq!(row.selected, LearnerId(0));
    }
    assert!(rows.windows(2).all(|w| w[1].ratio < w[0].ratio));
    // cost(S_selected) is within a constant of N, so ratio * N is bounded.
    for row in &rows {
        let scaled = row.ratio * row.n_full as f64;
        assert!((10.0..=40.0).contains(&scaled), "{scaled}");
    }
}

#[test]
fn regret_of_all_optimal_pool_is_zero() {
    let specs = [
        SyntheticCurveSpec::inverse(0.9, 0.5),
        SyntheticCurveSpec::inverse(0.9, 0.6),
    ];
    let rows = regret_trend(&specs, &[1_000, 10_000], 10, 2.0, 0.01, 1).unwrap();
    assert!(rows.iter().all(|r| r.regret == 0.0));
}

#[test]
fn regret_ratio_falls_for_an_inverse_pool() {
    let specs: Vec<_> = [
        (0.95, 0.9),
        (0.93, 0.5),
        (0.92, 0.9),
        (0.90, 0.3),
        (0.88, 0.8),
    ]
    .iter()
    .map(|&(a, c)| SyntheticCurveSpec::inverse(a, c))
    .collect();
    let rows = regret_trend(&specs, &[1_000, 10_000, 100_000], 10, 2.0, 0.01, 1).unwrap();
    assert!(rows.iter().all(|r| r.selected == LearnerId(0)));
    assert!(rows.windows(2).all(|w| w[1].ratio < w[0].ratio), "{rows:?}");
}

#[test]
fn random_problems_pass_every_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = SuiteParams {
        learners: (2, 8),
        full_size: (1_000, 5_000),
        ..SuiteParams::default()
    };
    for _ in 0..10 {
        let problem = sample_problem(&mut rng, &params).unwrap();
        let out = run_daub_star(&problem).unwrap();
        assert!(out.passed(), "{:?}", out.failed().collect::<Vec<_>>());
        for t in &out.thresholds {
            assert!(t.n_delta >= 2 * problem.config().bootstrap_horizon() || !t.suboptimal);
        }
    }
}

#[test]
fn sampled_curves_are_well_behaved_and_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = config(1.5, 5, 7594, 0.01);
    for _ in 0..20 {
        let spec = sample_curve(&mut rng, &cfg, 0.5, 0.5).unwrap();
        assert_eq!(spec.well_behaved_violation(1, cfg.n_full()), None);
        assert!(verify_spec_ub(&spec, &cfg).passed);
    }
}

#[test]
fn scaled_derivative_decays() {
    let n_full = 100_000;
    let families = [
        CurveFamily::Inverse {
            asymptote: 0.9,
            scale: 0.8,
        },
        CurveFamily::PowerLaw {
            asymptote: 0.9,
            scale: 0.8,
            exponent: 0.5,
        },
        CurveFamily::PowerLaw {
            asymptote: 0.8,
            scale: 0.5,
            exponent: 1.3,
        },
    ];
    for fam in families {
        let spec = SyntheticCurveSpec::new(fam);
        let f = |n: u64| spec.exact_accuracy(n);
        let late = max_scaled_derivative(f, n_full / 2, n_full, 1);
        let early = max_scaled_derivative(f, n_full / 4, n_full / 2, 1);
        assert!(late <= early, "{fam:?}: {late} > {early}");
    }
}
