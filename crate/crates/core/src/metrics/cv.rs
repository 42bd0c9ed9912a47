//! Stratified k-fold cross-validation.
//!
//! Positives and negatives are shuffled separately and dealt round-robin
//! into folds, the negatives starting where the positives stopped, so class
//! counts per fold differ by at most one and fold totals stay balanced too.
//! Records censored before the horizon have no label and are never trained
//! on; they are dealt into folds as well so each one is scored by exactly one
//! fold model for the survival comparison.
//!
//! All randomness comes from the CV seed: the fold shuffle uses one stream
//! and fold `f`'s forest is trained with master seed `derive_seed(seed, f)`.
//! The `seed` inside the forest parameters is ignored here.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{MetricsError, PredictionRow, PredictionSet, ScoredFollowUp};
use crate::cohort::{derive_label, Cohort, Field, Horizon, HorizonLabel};
use crate::forest::{record_row, train_forest, Dataset, ForestModel, ForestParams};
use crate::kdri::{kdri_score, RiskCoefficientSet};
use crate::rng::{derive_seed, stream_rng};

const SHUFFLE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Forest {
        features: Vec<Field>,
        params: ForestParams,
    },
    Kdri(RiskCoefficientSet),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldAssignment {
    /// Position in the cohort.
    pub index: usize,
    pub record_id: u64,
    /// `None` for records censored before the horizon.
    pub positive: Option<bool>,
    pub fold: usize,
}

/// Fold membership of every record in a cohort, in cohort order.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    k: usize,
    assignments: Vec<FoldAssignment>,
}

fn deal(items: &mut [usize], start: usize, k: usize, fold: &mut [usize], rng: &mut impl rand::Rng) {
    items.shuffle(rng);
    for (i, &idx) in items.iter().enumerate() {
        fold[idx] = (start + i) % k;
    }
}

impl FoldPlan {
    pub fn new(
        cohort: &Cohort,
        horizon: Horizon,
        k: usize,
        seed: u64,
    ) -> Result<Self, MetricsError> {
        if k < 2 {
            return Err(MetricsError::InvalidFolds(k));
        }
        let labels: Vec<HorizonLabel> = cohort
            .records()
            .iter()
            .map(|r| derive_label(r, horizon))
            .collect();
        let pick = |want: HorizonLabel| -> Vec<usize> {
            (0..labels.len()).filter(|&i| labels[i] == want).collect()
        };
        let mut pos = pick(HorizonLabel::Positive);
        let mut neg = pick(HorizonLabel::Negative);
        let mut cen = pick(HorizonLabel::Censored);
        let labeled = pos.len() + neg.len();
        if labeled < k {
            return Err(MetricsError::TooFewRecords { labeled, k });
        }

        let mut rng = stream_rng(seed, SHUFFLE_STREAM);
        let mut fold = vec![0; labels.len()];
        deal(&mut pos, 0, k, &mut fold, &mut rng);
        deal(&mut neg, pos.len() % k, k, &mut fold, &mut rng);
        deal(&mut cen, 0, k, &mut fold, &mut rng);

        let assignments = cohort
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| FoldAssignment {
                index: i,
                record_id: r.record_id,
                positive: match labels[i] {
                    HorizonLabel::Positive => Some(true),
                    HorizonLabel::Negative => Some(false),
                    HorizonLabel::Censored => None,
                },
                fold: fold[i],
            })
            .collect();
        let plan = FoldPlan { k, assignments };
        for f in 0..k {
            let (p, n) = plan.training_counts(f);
            if p == 0 || n == 0 {
                return Err(MetricsError::FoldSingleClass { fold: f });
            }
        }
        Ok(plan)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[FoldAssignment] {
        &self.assignments
    }

    /// Labeled records outside fold `f`, in cohort order.
    pub fn training(&self, f: usize) -> impl Iterator<Item = &FoldAssignment> {
        self.assignments
            .iter()
            .filter(move |a| a.positive.is_some() && a.fold != f)
    }

    fn training_counts(&self, f: usize) -> (usize, usize) {
        self.training(f).fold((0, 0), |(p, n), a| {
            if a.positive == Some(true) {
                (p + 1, n)
            } else {
                (p, n + 1)
            }
        })
    }
}

/// Out-of-fold scores for every labeled record plus scores for the records
/// censored before the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub predictions: PredictionSet,
    pub extended: Vec<ScoredFollowUp>,
    pub plan: FoldPlan,
}

fn assemble(
    cohort: &Cohort,
    plan: FoldPlan,
    scores: &[f64],
) -> Result<CrossValidation, MetricsError> {
    let mut rows = Vec::new();
    let mut extended = Vec::new();
    for a in plan.assignments() {
        let r = &cohort.records()[a.index];
        match a.positive {
            Some(positive) => rows.push(PredictionRow {
                record_id: r.record_id,
                score: scores[a.index],
                positive,
                survival_months: r.graft_survival_months,
                event: r.graft_failed,
            }),
            None => extended.push(ScoredFollowUp {
                record_id: r.record_id,
                score: scores[a.index],
                survival_months: r.graft_survival_months,
                event: r.graft_failed,
            }),
        }
    }
    Ok(CrossValidation {
        predictions: PredictionSet::new(rows)?,
        extended,
        plan,
    })
}

struct FoldForests {
    models: Vec<ForestModel>,
    fields: Vec<Field>,
}

fn train_fold_forests(
    cohort: &Cohort,
    plan: &FoldPlan,
    features: &[Field],
    params: &ForestParams,
    seed: u64,
) -> Result<FoldForests, MetricsError> {
    let labeled: Vec<&FoldAssignment> = plan
        .assignments()
        .iter()
        .filter(|a| a.positive.is_some())
        .collect();
    let full = Dataset::from_records(
        features,
        labeled
            .iter()
            .map(|a| (&cohort.records()[a.index], a.positive == Some(true))),
    )?;
    let models = (0..plan.k())
        .into_par_iter()
        .map(|f| {
            let rows: Vec<usize> = (0..labeled.len())
                .filter(|&i| labeled[i].fold != f)
                .collect();
            let params = ForestParams {
                seed: derive_seed(seed, f as u64),
                ..params.clone()
            };
            train_forest(&full.subset(&rows), &params)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FoldForests {
        models,
        fields: features.to_vec(),
    })
}

pub fn cross_validate(
    cohort: &Cohort,
    spec: &ModelSpec,
    horizon: Horizon,
    k: usize,
    seed: u64,
) -> Result<CrossValidation, MetricsError> {
    let plan = FoldPlan::new(cohort, horizon, k, seed)?;
    let scores: Vec<f64> = match spec {
        ModelSpec::Kdri(coeffs) => cohort
            .records()
            .iter()
            .map(|r| Ok(kdri_score(r, coeffs)?.value()))
            .collect::<Result<_, MetricsError>>()?,
        ModelSpec::Forest { features, params } => {
            let ff = train_fold_forests(cohort, &plan, features, params, seed)?;
            plan.assignments()
                .par_iter()
                .map(|a| {
                    let x = record_row(&ff.fields, &cohort.records()[a.index])?;
                    Ok(ff.models[a.fold].predict_proba(&x)?)
                })
                .collect::<Result<_, MetricsError>>()?
        }
    };
    assemble(cohort, plan, &scores)
}

/// Cross-validated forests at several tree counts over shared folds. Each
/// fold forest is trained once with the largest count; smaller forests are
/// its leading trees, identical to training them directly.
pub fn sweep_forest(
    cohort: &Cohort,
    features: &[Field],
    params: &ForestParams,
    horizon: Horizon,
    k: usize,
    seed: u64,
    tree_counts: &[usize],
) -> Result<Vec<(usize, CrossValidation)>, MetricsError> {
    let max = match tree_counts.iter().max() {
        Some(&m) if m > 0 && !tree_counts.contains(&0) => m,
        _ => {
            return Err(MetricsError::Forest(crate::forest::ForestError::Params(
                "tree counts must be non-empty and >= 1".into(),
            )))
        }
    };
    let plan = FoldPlan::new(cohort, horizon, k, seed)?;
    let params = ForestParams {
        n_trees: max,
        ..params.clone()
    };
    let ff = train_fold_forests(cohort, &plan, features, &params, seed)?;
    // cumulative positive votes: votes[i][t] over the first t trees
    let votes: Vec<Vec<u32>> = plan
        .assignments()
        .par_iter()
        .map(|a| {
            let x = record_row(&ff.fields, &cohort.records()[a.index])?;
            let mut acc = Vec::with_capacity(max + 1);
            acc.push(0u32);
            for t in &ff.models[a.fold].trees {
                acc.push(acc.last().unwrap() + t.vote(&x) as u32);
            }
            Ok(acc)
        })
        .collect::<Result<_, MetricsError>>()?;
    tree_counts
        .iter()
        .map(|&n| {
            let scores: Vec<f64> = votes.iter().map(|v| v[n] as f64 / n as f64).collect();
            Ok((n, assemble(cohort, plan.clone(), &scores)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::record::tests::sample_record;
    use crate::cohort::TransplantRecord;

    fn cohort(n: u64) -> Cohort {
        let records = (1..=n)
            .map(|i| TransplantRecord {
                donor_age: 20 + (i % 50) as u32,
                graft_failed: i % 5 == 0,
                graft_survival_months: if i % 5 == 0 {
                    6.0
                } else if i % 7 == 0 {
                    3.0
                } else {
                    60.0
                },
                ..sample_record(i)
            })
            .collect();
        Cohort::new(records, "test").unwrap()
    }

    #[test]
    fn every_labeled_record_scored_once() {
        let c = cohort(100);
        let cv = cross_validate(
            &c,
            &ModelSpec::Kdri(RiskCoefficientSet::empty()),
            Horizon::Months12,
            10,
            3,
        )
        .unwrap();
        let labeled = c.labeled(Horizon::Months12).count();
        assert_eq!(cv.predictions.len(), labeled);
        assert_eq!(cv.predictions.len() + cv.extended.len(), 100);
        let ids: Vec<u64> = cv.predictions.rows().iter().map(|r| r.record_id).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn stratified_sizes() {
        let c = cohort(100);
        let plan = FoldPlan::new(&c, Horizon::Months12, 10, 9).unwrap();
        for class in [true, false] {
            let mut sizes = vec![0; 10];
            for a in plan
                .assignments()
                .iter()
                .filter(|a| a.positive == Some(class))
            {
                sizes[a.fold] += 1;
            }
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            assert!(hi - lo <= 1, "{sizes:?}");
        }
    }

    #[test]
    fn too_few_records_and_bad_k() {
        let c = cohort(5);
        assert!(matches!(
            FoldPlan::new(&c, Horizon::Months12, 10, 0),
            Err(MetricsError::TooFewRecords { .. })
        ));
        assert!(matches!(
            FoldPlan::new(&c, Horizon::Months12, 1, 0),
            Err(MetricsError::InvalidFolds(1))
        ));
    }

    #[test]
    fn single_positive_cannot_train_every_fold() {
        let mut records: Vec<TransplantRecord> = (1..=20).map(sample_record).collect();
        records[0].graft_failed = true;
        records[0].graft_survival_months = 2.0;
        let c = Cohort::new(records, "t").unwrap();
        assert!(matches!(
            FoldPlan::new(&c, Horizon::Months12, 5, 0),
            Err(MetricsError::FoldSingleClass { .. })
        ));
    }

    #[test]
    fn sweep_matches_direct_training() {
        let c = cohort(80);
        let features = vec![Field::DonorAge, Field::DonorCreatinine];
        let params = ForestParams {
            n_trees: 7,
            ..ForestParams::default()
        };
        let direct = cross_validate(
            &c,
            &ModelSpec::Forest {
                features: features.clone(),
                params: params.clone(),
            },
            Horizon::Months12,
            4,
            11,
        )
        .unwrap();
        let swept =
            sweep_forest(&c, &features, &params, Horizon::Months12, 4, 11, &[3, 7]).unwrap();
        assert_eq!(swept[1].1, direct);
        assert_eq!(swept[0].0, 3);
    }
}
