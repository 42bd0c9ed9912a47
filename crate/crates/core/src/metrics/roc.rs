use serde::Serialize;

use super::{MetricsError, PredictionSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are called positive at this point.
    pub threshold: f64,
}

/// ROC staircase from `(0,0)` to `(1,1)`, one point per distinct score.
/// Tied scores move both coordinates at once (a diagonal segment).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        s
    }
}

pub fn roc_curve(preds: &PredictionSet) -> Result<RocCurve, MetricsError> {
    let (n_pos, n_neg) = preds.require_both_classes()?;
    let mut rows: Vec<(f64, bool)> = preds.rows().iter().map(|r| (r.score, r.positive)).collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < rows.len() {
        let s = rows[i].0;
        while i < rows.len() && rows[i].0 == s {
            if rows[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold: s,
        });
    }
    Ok(RocCurve { points })
}

/// Mann-Whitney AUC via mid-ranks: the probability that a random positive
/// outscores a random negative, ties counting one half.
pub fn auc(preds: &PredictionSet) -> Result<f64, MetricsError> {
    let (n_pos, n_neg) = preds.require_both_classes()?;
    let mut rows: Vec<(f64, bool)> = preds.rows().iter().map(|r| (r.score, r.positive)).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < rows.len() {
        let mut j = i;
        while j < rows.len() && rows[j].0 == rows[i].0 {
            j += 1;
        }
        // ranks i+1..=j share the mid-rank
        let mid = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = rows[i..j].iter().filter(|r| r.1).count();
        rank_sum += mid * pos_in_group as f64;
        i = j;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}
