//! DeLong's nonparametric comparison of two correlated AUCs.
//!
//! Each positive gets a placement `V₁₀ = P(score > random negative)` and each
//! negative a placement `V₀₁ = P(random positive > score)`, ties counting one
//! half. AUC is the mean of either set. For two models scored on the same
//! records,
//!
//! ```text
//! Var(AUCₘ)        = S₁₀[m,m]/n₊ + S₀₁[m,m]/n₋
//! Cov(AUC_a,AUC_b) = S₁₀[a,b]/n₊ + S₀₁[a,b]/n₋
//! z = (AUC_a − AUC_b) / sqrt(Var_a + Var_b − 2·Cov)
//! ```
//!
//! with `S` the sample (n − 1) covariances of the placements. Applied to a
//! pooled out-of-fold prediction list this is an approximation: fold models
//! differ, so placements are not exchangeable across folds.

use std::collections::HashMap;

use serde::Serialize;

use super::normal::two_sided_p;
use super::{MetricsError, PredictionSet};

#[derive(Debug, Clone, PartialEq)]
pub struct Placements {
    /// `V₁₀` per positive, in prediction-set order.
    pub positives: Vec<f64>,
    /// `V₀₁` per negative, in prediction-set order.
    pub negatives: Vec<f64>,
}

impl Placements {
    pub fn auc(&self) -> f64 {
        self.positives.iter().sum::<f64>() / self.positives.len() as f64
    }
}

/// Fraction of `sorted` strictly below `x`, plus half the fraction equal.
fn below(sorted: &[f64], x: f64) -> f64 {
    let lt = sorted.partition_point(|&v| v < x);
    let le = sorted.partition_point(|&v| v <= x);
    (lt as f64 + 0.5 * (le - lt) as f64) / sorted.len() as f64
}

pub fn placements(preds: &PredictionSet) -> Result<Placements, MetricsError> {
    preds.require_both_classes()?;
    let mut pos: Vec<f64> = preds
        .rows()
        .iter()
        .filter(|r| r.positive)
        .map(|r| r.score)
        .collect();
    let mut neg: Vec<f64> = preds
        .rows()
        .iter()
        .filter(|r| !r.positive)
        .map(|r| r.score)
        .collect();
    let pos_order = pos.clone();
    let neg_order = neg.clone();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    Ok(Placements {
        positives: pos_order.iter().map(|&x| below(&neg, x)).collect(),
        negatives: neg_order.iter().map(|&y| 1.0 - below(&pos, y)).collect(),
    })
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (n - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeLongResult {
    pub auc_a: f64,
    pub auc_b: f64,
    pub var_a: f64,
    pub var_b: f64,
    pub cov_ab: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Reorders `b` to follow `a`'s record order, checking ids and labels agree.
fn align(a: &PredictionSet, b: &PredictionSet) -> Result<PredictionSet, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::Unpaired(format!(
            "{} vs {} rows",
            a.len(),
            b.len()
        )));
    }
    let index: HashMap<u64, usize> = b
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.record_id, i))
        .collect();
    let mut rows = Vec::with_capacity(a.len());
    for ra in a.rows() {
        let rb = index
            .get(&ra.record_id)
            .map(|&i| b.rows()[i])
            .ok_or_else(|| MetricsError::Unpaired(format!("record {} missing", ra.record_id)))?;
        if rb.positive != ra.positive {
            return Err(MetricsError::Unpaired(format!(
                "record {} labeled differently",
                ra.record_id
            )));
        }
        rows.push(rb);
    }
    PredictionSet::new(rows)
}

pub fn delong_test(a: &PredictionSet, b: &PredictionSet) -> Result<DeLongResult, MetricsError> {
    let b = align(a, b)?;
    let (n_pos, n_neg) = a.require_both_classes()?;
    if n_pos < 2 || n_neg < 2 {
        return Err(MetricsError::TooFew {
            positives: n_pos,
            negatives: n_neg,
        });
    }
    let pa = placements(a)?;
    let pb = placements(&b)?;
    let (np, nn) = (n_pos as f64, n_neg as f64);
    let var_a = covariance(&pa.positives, &pa.positives) / np
        + covariance(&pa.negatives, &pa.negatives) / nn;
    let var_b = covariance(&pb.positives, &pb.positives) / np
        + covariance(&pb.negatives, &pb.negatives) / nn;
    let cov_ab = covariance(&pa.positives, &pb.positives) / np
        + covariance(&pa.negatives, &pb.negatives) / nn;
    let auc_a = pa.auc();
    let auc_b = pb.auc();
    let diff = auc_a - auc_b;
    let var = var_a + var_b - 2.0 * cov_ab;
    let z = if diff == 0.0 {
        0.0
    } else if var > 0.0 {
        diff / var.sqrt()
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(DeLongResult {
        auc_a,
        auc_b,
        var_a,
        var_b,
        cov_ab,
        z,
        p_value: two_sided_p(z),
    })
}
