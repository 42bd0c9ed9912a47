mod common;

use common::exhaustive_split;
use graftrisk::cohort::{generate_synthetic_cohort, Field, Horizon, SyntheticConfig};
use graftrisk::forest::{
    balanced_bootstrap, best_split, grow_tree, train_forest, variable_importance, Dataset,
    FeatureSpec, ForestModel, ForestParams, SplitTest,
};
use graftrisk::metrics::{auc, cross_validate, ModelSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn numeric(cols: &[Vec<f64>], labels: &[bool]) -> Dataset {
    let specs = (0..cols.len())
        .map(|j| FeatureSpec::numeric(format!("x{j}")))
        .collect();
    let rows: Vec<Vec<f64>> = (0..labels.len())
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect();
    Dataset::new(specs, &rows, labels.to_vec()).unwrap()
}

#[test]
fn six_record_split_matches_enumeration() {
    let cols = vec![
        vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        vec![0.5, 3.5, 1.5, 2.5, 0.0, 4.0],
    ];
    let labels = [false, true, false, true, false, true];
    let (f, t, g) = exhaustive_split(&cols, &labels).unwrap();
    let data = numeric(&cols, &labels);
    let s = best_split(&data, &[0, 1, 2, 3, 4, 5], &[0, 1], 1).unwrap();
    assert_eq!(s.feature, f);
    assert_eq!(s.test, SplitTest::Threshold(t));
    assert!((s.gain - g).abs() < 1e-12);
    // x1 <= 2.0 isolates the three negatives
    assert_eq!((f, t), (1, 2.0));
}

proptest! {
    #[test]
    fn best_split_matches_enumeration_on_small_nodes(
        raw in prop::collection::vec((0u8..6, 0u8..6, any::<bool>()), 6..=12),
    ) {
        let cols = vec![
            raw.iter().map(|r| r.0 as f64).collect::<Vec<_>>(),
            raw.iter().map(|r| r.1 as f64 * 1.5).collect::<Vec<_>>(),
        ];
        let labels: Vec<bool> = raw.iter().map(|r| r.2).collect();
        let data = numeric(&cols, &labels);
        let sample: Vec<u32> = (0..labels.len() as u32).collect();
        let got = best_split(&data, &sample, &[0, 1], 1);
        match exhaustive_split(&cols, &labels) {
            None => prop_assert!(got.is_none()),
            Some((_, _, g)) => {
                let s = got.unwrap();
                // equal-gain candidates may differ; the gain may not
                prop_assert!((s.gain - g).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trees_fit_conflict_free_bootstraps(
        raw in prop::collection::vec((0u8..8, 0u8..8, 0u8..3), 8..60),
        seed in any::<u64>(),
    ) {
        // labels are a function of the features, so no two rows conflict
        let cols = vec![
            raw.iter().map(|r| r.0 as f64).collect::<Vec<_>>(),
            raw.iter().map(|r| r.1 as f64).collect::<Vec<_>>(),
            raw.iter().map(|r| r.2 as f64).collect::<Vec<_>>(),
        ];
        let labels: Vec<bool> = raw.iter().map(|r| (r.0 * 3 + r.1 * 5 + r.2) % 4 == 0).collect();
        let pos = labels.iter().filter(|&&y| y).count();
        prop_assume!(pos > 0 && labels.len() - pos >= pos);
        let data = numeric(&cols, &labels);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = balanced_bootstrap(&labels, &mut rng).unwrap();
        prop_assert_eq!(sample.len(), 2 * pos);
        prop_assert_eq!(sample.iter().filter(|&&i| labels[i as usize]).count(), pos);
        let tree = grow_tree(&data, &sample, 1, 1, &mut rng).unwrap();
        for &i in &sample {
            prop_assert_eq!(tree.vote(&data.row(i as usize)), labels[i as usize]);
        }
    }
}

fn planted(n: usize, seed: u64) -> graftrisk::cohort::Cohort {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/planted.toml"
    ))
    .unwrap();
    let cfg = SyntheticConfig {
        n,
        ..SyntheticConfig::from_toml_str(&text).unwrap()
    };
    generate_synthetic_cohort(&cfg, seed).unwrap()
}

fn features() -> Vec<Field> {
    Field::DONOR_FEATURES
        .iter()
        .chain(Field::RECIPIENT_FEATURES.iter())
        .copied()
        .collect()
}

#[test]
fn worker_count_does_not_change_the_model() {
    let cohort = planted(600, 1);
    let data = Dataset::from_records(&features(), cohort.labeled(Horizon::Months12)).unwrap();
    let params = ForestParams {
        n_trees: 40,
        seed: 99,
        ..ForestParams::default()
    };
    let fit = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| train_forest(&data, &params).unwrap())
    };
    let one = fit(1).to_json();
    assert_eq!(one, fit(4).to_json());
    assert_eq!(one, fit(8).to_json());
    let back = ForestModel::from_reader(one.as_bytes()).unwrap();
    assert_eq!(back.to_json(), one);
}

#[test]
fn importance_is_nonnegative_and_finds_the_signal() {
    let cohort = planted(1500, 2);
    let data = Dataset::from_records(&features(), cohort.labeled(Horizon::Months12)).unwrap();
    let m = train_forest(
        &data,
        &ForestParams {
            n_trees: 200,
            seed: 3,
            ..ForestParams::default()
        },
    )
    .unwrap();
    let ranked = variable_importance(&m);
    assert!(ranked.iter().all(|(_, v)| *v >= 0.0));
    let top: Vec<&str> = ranked[..3].iter().map(|(n, _)| n.as_str()).collect();
    assert!(
        top.contains(&"donor_age") && top.contains(&"donor_creatinine"),
        "{top:?}"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let i = rng.random_range(0..data.len());
        let votes = m.positive_votes(&data.row(i)).unwrap();
        assert_eq!(m.predict_proba(&data.row(i)).unwrap(), votes as f64 / 200.0);
    }
}

#[test]
fn planted_cohort_is_learnable() {
    let cohort = planted(2000, 3);
    let spec = ModelSpec::Forest {
        features: features(),
        params: ForestParams {
            n_trees: 300,
            ..ForestParams::default()
        },
    };
    let cv = cross_validate(&cohort, &spec, Horizon::Months12, 10, 8).unwrap();
    let a = auc(&cv.predictions).unwrap();
    assert!(a > 0.90, "out-of-fold AUC {a}");
}

#[test]
fn determining_feature_outranks_noise() {
    let mut wins = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..200).map(|_| rng.random_range(0..20) as f64).collect();
        let b: Vec<f64> = (0..200).map(|_| rng.random_range(0..20) as f64).collect();
        let labels: Vec<bool> = a.iter().map(|&x| x >= 16.0).collect();
        let data = numeric(&[a, b], &labels);
        let m = train_forest(
            &data,
            &ForestParams {
                n_trees: 25,
                seed,
                ..ForestParams::default()
            },
        )
        .unwrap();
        let ranked = variable_importance(&m);
        if ranked[0].0 == "x0" && ranked[0].1 > ranked[1].1 {
            wins += 1;
        }
    }
    assert!(wins >= 95, "A ranked first in {wins}/100 runs");
}

#[test]
fn more_trees_never_hurt_on_planted_data() {
    let feats = features();
    for seed in 0..10u64 {
        let train = planted(2000, 100 + seed);
        let test = planted(2000, 200 + seed);
        let data = Dataset::from_records(&feats, train.labeled(Horizon::Months12)).unwrap();
        let big = train_forest(
            &data,
            &ForestParams {
                n_trees: 1000,
                seed,
                ..ForestParams::default()
            },
        )
        .unwrap();
        let score = |m: &ForestModel| {
            let rows = test
                .labeled(Horizon::Months12)
                .map(|(r, y)| graftrisk::metrics::PredictionRow {
                    record_id: r.record_id,
                    score: m.predict_record(r).unwrap(),
                    positive: y,
                    survival_months: r.graft_survival_months,
                    event: r.graft_failed,
                })
                .collect();
            auc(&graftrisk::metrics::PredictionSet::new(rows).unwrap()).unwrap()
        };
        let (a10, a1000) = (score(&big.truncated(10)), score(&big));
        assert!(a1000 >= a10 - 0.01, "seed {seed}: {a1000} vs {a10}");
    }
}
