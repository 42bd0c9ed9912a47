use graftrisk::cohort::{generate_synthetic_cohort, Horizon, SyntheticConfig};
use graftrisk::metrics::normal::chi2_1df_sf;
use graftrisk::survival::{km_estimate, log_rank, SurvivalSample};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

fn sample_strategy() -> impl Strategy<Value = Vec<(f64, bool)>> {
    prop::collection::vec(((0u8..30).prop_map(|t| t as f64), any::<bool>()), 1..60)
}

proptest! {
    #[test]
    fn km_is_monotone_and_bounded(rows in sample_strategy()) {
        let km = km_estimate(&SurvivalSample::from_pairs(&rows).unwrap()).unwrap();
        let mut prev = 1.0;
        for s in &km.steps {
            prop_assert!(s.survival <= prev && s.survival >= 0.0);
            prev = s.survival;
        }
        if let Some(first) = km.steps.first() {
            prop_assert_eq!(km.survival_at(first.time - 0.5), 1.0);
        }
    }

    #[test]
    fn km_without_censoring_is_the_empirical_survival(times in prop::collection::vec(0u8..40, 1..60)) {
        let rows: Vec<(f64, bool)> = times.iter().map(|&t| (t as f64, true)).collect();
        let km = km_estimate(&SurvivalSample::from_pairs(&rows).unwrap()).unwrap();
        let n = rows.len() as f64;
        for t in 0..41 {
            let alive = times.iter().filter(|&&x| x as usize > t).count() as f64;
            prop_assert!((km.survival_at(t as f64) - alive / n).abs() < 1e-12);
        }
    }

    #[test]
    fn log_rank_symmetric_and_zero_on_copies(a in sample_strategy(), b in sample_strategy()) {
        let sa = SurvivalSample::from_pairs(&a).unwrap();
        let sb = SurvivalSample::from_pairs(&b).unwrap();
        if let (Ok(ab), Ok(ba)) = (log_rank(&sa, &sb), log_rank(&sb, &sa)) {
            prop_assert!((ab.chi2 - ba.chi2).abs() <= 1e-9 * ab.chi2.max(1.0));
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-9);
            prop_assert!(ab.chi2 >= 0.0);
            let oe_a = ab.observed_a - ab.expected_a;
            let oe_b = ba.observed_b - ba.expected_b;
            prop_assert!((oe_a - oe_b).abs() < 1e-9);
        }
        if let Ok(r) = log_rank(&sa, &sa.clone()) {
            prop_assert_eq!(r.chi2, 0.0);
            prop_assert_eq!(r.p_value, 1.0);
        }
    }
}

#[test]
fn chi_square_table_point() {
    assert_eq!(chi2_1df_sf(0.0), 1.0);
    assert!((chi2_1df_sf(3.841) - 0.05).abs() < 1e-4);
}

#[test]
fn hazard_ratio_three_is_detected() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut draw = |rate: f64| -> Vec<(f64, bool)> {
        let ev = Exp::new(rate).unwrap();
        let cen = Exp::new(0.01).unwrap();
        (0..500)
            .map(|_| {
                let (t, c): (f64, f64) = (ev.sample(&mut rng), cen.sample(&mut rng));
                (t.min(c).min(120.0), t <= c && t <= 120.0)
            })
            .collect()
    };
    let a = SurvivalSample::from_pairs(&draw(0.03)).unwrap();
    let b = SurvivalSample::from_pairs(&draw(0.01)).unwrap();
    let r = log_rank(&a, &b).unwrap();
    assert!(r.p_value < 0.001, "p = {}", r.p_value);
    assert!(r.observed_a > r.expected_a);
}

#[test]
fn older_donors_fail_sooner_in_planted_cohort() {
    let cfg = SyntheticConfig::from_toml_str(
        r#"
        n = 5000
        baseline_failure_rate = 0.05
        [hazard.donor_age]
        beta = 0.05
        center = 40
        "#,
    )
    .unwrap();
    let cohort = generate_synthetic_cohort(&cfg, 77).unwrap();
    let mut ages: Vec<u32> = cohort.records().iter().map(|r| r.donor_age).collect();
    ages.sort_unstable();
    let (q1, q3) = (ages[ages.len() / 4], ages[3 * ages.len() / 4]);
    let group = |keep: &dyn Fn(u32) -> bool| {
        let rows: Vec<(f64, bool)> = cohort
            .records()
            .iter()
            .filter(|r| keep(r.donor_age))
            .map(|r| (r.graft_survival_months, r.graft_failed))
            .collect();
        SurvivalSample::from_pairs(&rows).unwrap()
    };
    let old = group(&|a| a >= q3);
    let young = group(&|a| a <= q1);
    let (km_old, km_young) = (km_estimate(&old).unwrap(), km_estimate(&young).unwrap());
    for t in [12.0, 36.0, 60.0, 120.0] {
        assert!(km_old.survival_at(t) < km_young.survival_at(t), "t = {t}");
    }
    assert!(log_rank(&old, &young).unwrap().p_value < 0.01);
    // sanity: the horizon labels see the same signal
    assert!(cohort.labeled(Horizon::Months36).any(|(_, y)| y));
}

#[test]
fn follow_up_without_failures_is_the_censoring_clock() {
    // failure-free cohorts are censored only by the censoring clock
    let cfg = SyntheticConfig::from_toml_str(
        "n = 4000\nbaseline_failure_rate = 0.000001\ncensoring_rate_per_month = 0.02\n",
    )
    .unwrap();
    let cohort = generate_synthetic_cohort(&cfg, 1).unwrap();
    let mean: f64 = cohort
        .records()
        .iter()
        .map(|r| r.graft_survival_months)
        .sum::<f64>()
        / 4000.0;
    // Exp(0.02) capped at 240 months has mean 50·(1 − e^{−4.8}) ≈ 49.59
    let want = 50.0 * (1.0 - (-4.8f64).exp());
    assert!(
        (mean - want).abs() < 4.0 * 50.0 / 4000f64.sqrt(),
        "mean {mean}"
    );
}
