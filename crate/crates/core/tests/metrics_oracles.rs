mod common;

use common::{brute_auc, delong_oracle, exhaustive_threshold, preds, random_instance};
use graftrisk::metrics::{
    auc, compare_models_at_fnr, confusion_at, delong_test, roc_curve, threshold_at_fnr,
    PredictionRow, PredictionSet,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (4usize..120).prop_flat_map(|n| {
        (
            prop::collection::vec((0u8..12).prop_map(|v| v as f64 / 4.0), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_filter("both classes", |(_, y)| {
                y.iter().any(|&v| v) && y.iter().any(|&v| !v)
            })
    })
}

proptest! {
    #[test]
    fn auc_equals_pair_count_and_trapezoid((s, y) in scored_labels()) {
        let p = preds(&s, &y);
        let a = auc(&p).unwrap();
        prop_assert!((a - brute_auc(&s, &y)).abs() < 1e-12);
        prop_assert!((a - roc_curve(&p).unwrap().area()).abs() < 1e-12);
    }

    #[test]
    fn auc_invariant_under_increasing_transform((s, y) in scored_labels()) {
        let p = preds(&s, &y);
        let q = p.map_scores(|x| (x * 3.0).exp() - 7.0).unwrap();
        prop_assert_eq!(auc(&p).unwrap(), auc(&q).unwrap());
    }

    #[test]
    fn roc_is_a_monotone_staircase((s, y) in scored_labels()) {
        let c = roc_curve(&preds(&s, &y)).unwrap();
        let first = c.points.first().unwrap();
        let last = c.points.last().unwrap();
        prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in c.points.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            prop_assert!(w[1].threshold < w[0].threshold);
        }
    }

    #[test]
    fn delong_self_and_swap((s, y) in scored_labels(), shift in prop::collection::vec(0u8..5, 120)) {
        let a = preds(&s, &y);
        let b = a.map_scores(|x| x).unwrap();
        let r = delong_test(&a, &b);
        if let Ok(r) = r {
            prop_assert_eq!(r.p_value, 1.0);
            prop_assert_eq!(r.z, 0.0);
        }
        let t: Vec<f64> = s.iter().zip(&shift).map(|(x, d)| x + *d as f64 / 3.0).collect();
        let c = preds(&t, &y);
        if let (Ok(ab), Ok(ba)) = (delong_test(&a, &c), delong_test(&c, &a)) {
            prop_assert_eq!(ab.z, -ba.z);
            prop_assert_eq!(ab.p_value, ba.p_value);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }
    }

    #[test]
    fn threshold_is_optimal((s, y) in scored_labels(), target in 0.0f64..0.5) {
        let p = preds(&s, &y);
        let op = threshold_at_fnr(&p, target).unwrap();
        prop_assert!(op.confusion.false_negative_rate() <= target + 1e-12);
        let (tn, tp) = exhaustive_threshold(&s, &y, target);
        prop_assert_eq!((op.confusion.tn, op.confusion.tp), (tn, tp));
        prop_assert_eq!(op.confusion.total(), s.len());
    }

    #[test]
    fn confusion_partitions_the_set((s, y) in scored_labels(), t in -1.0f64..4.0) {
        let c = confusion_at(&preds(&s, &y), t);
        prop_assert_eq!(c.total(), s.len());
    }
}

#[test]
fn delong_terms_match_placement_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..50 {
        let (s, y) = random_instance(&mut rng, 100);
        let t: Vec<f64> = s
            .iter()
            .map(|x| x + rng.random_range(0..4) as f64 * 0.05)
            .collect();
        let r = delong_test(&preds(&s, &y), &preds(&t, &y)).unwrap();
        let o = delong_oracle(&s, &t, &y);
        assert!((r.auc_a - o.auc_a).abs() < 1e-10);
        assert!((r.auc_b - o.auc_b).abs() < 1e-10);
        assert!((r.var_a - o.var_a).abs() < 1e-10);
        assert!((r.var_b - o.var_b).abs() < 1e-10);
        assert!((r.cov_ab - o.cov).abs() < 1e-10);
    }
}

#[test]
fn interleaved_six_record_threshold() {
    // labels + - + + - -, scores descending 0.9 .. 0.4
    let s = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4];
    let y = [true, false, true, true, false, false];
    for target in [0.0, 0.34, 0.5, 0.67, 1.0] {
        let op = threshold_at_fnr(&preds(&s, &y), target).unwrap();
        let (tn, tp) = exhaustive_threshold(&s, &y, target);
        assert_eq!(
            (op.confusion.tn, op.confusion.tp),
            (tn, tp),
            "target {target}"
        );
    }
    // nothing may be missed: the cut is the lowest positive
    assert_eq!(
        threshold_at_fnr(&preds(&s, &y), 0.0).unwrap().threshold,
        0.6
    );
}

/// Scores for a planted case: model A sees the true risk, model B is noise.
fn planted_pair(n: usize, seed: u64) -> (PredictionSet, PredictionSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        let risk: f64 = rng.random_range(-3.0..3.0);
        let p = 1.0 / (1.0 + (-(risk * 1.5 - 2.2)).exp());
        let positive = rng.random_bool(p);
        let row = |score| PredictionRow {
            record_id: i as u64,
            score,
            positive,
            survival_months: 12.0,
            event: positive,
        };
        a.push(row(risk));
        b.push(row(rng.random::<f64>()));
    }
    (
        PredictionSet::new(a).unwrap(),
        PredictionSet::new(b).unwrap(),
    )
}

#[test]
fn true_risk_beats_noise() {
    let (a, b) = planted_pair(2000, 5);
    let r = delong_test(&a, &b).unwrap();
    assert!(r.auc_a > r.auc_b);
    assert!(r.p_value < 0.01, "p = {}", r.p_value);
    let d = compare_models_at_fnr(&b, &a, 0.10).unwrap();
    assert!(d.delta_tn > 0);
}
