use std::fmt;

use serde::Serialize;

use super::{MetricsError, PredictionSet};

/// Counts with "positive" meaning predicted graft failure (`score >= threshold`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn sensitivity(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_) as f64
    }

    pub fn false_negative_rate(&self) -> f64 {
        self.fn_ as f64 / (self.tp + self.fn_) as f64
    }

    pub fn specificity(&self) -> f64 {
        self.tn as f64 / (self.tn + self.fp) as f64
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TP={} TN={} FP={} FN={}",
            self.tp, self.tn, self.fp, self.fn_
        )
    }
}

pub fn confusion_at(preds: &PredictionSet, threshold: f64) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::default();
    for r in preds.rows() {
        match (r.score >= threshold, r.positive) {
            (true, true) => m.tp += 1,
            (true, false) => m.fp += 1,
            (false, true) => m.fn_ += 1,
            (false, false) => m.tn += 1,
        }
    }
    m
}

/// Largest number of false negatives compatible with `FNR <= target`.
pub fn max_false_negatives(target_fnr: f64, positives: usize) -> usize {
    ((target_fnr * positives as f64) + 1e-9).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub sensitivity: f64,
    pub confusion: ConfusionMatrix,
}

/// Operating point with the most true negatives among thresholds whose
/// false-negative rate does not exceed `target_fnr`; among those, the one
/// with the most true positives (the threshold slides down over runs of
/// positive-only scores). Candidate thresholds are the observed scores plus
/// `+∞`.
pub fn threshold_at_fnr(
    preds: &PredictionSet,
    target_fnr: f64,
) -> Result<OperatingPoint, MetricsError> {
    if !(0.0..=1.0).contains(&target_fnr) {
        return Err(MetricsError::InvalidTarget(target_fnr));
    }
    let n_pos = preds.positives();
    if n_pos == 0 {
        return Err(MetricsError::NoPositives);
    }
    let allowed = max_false_negatives(target_fnr, n_pos);

    // (score, positives, negatives) per distinct score, descending
    let mut rows: Vec<(f64, bool)> = preds.rows().iter().map(|r| (r.score, r.positive)).collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for (s, y) in rows {
        match groups.last_mut() {
            Some(g) if g.0 == s => {
                if y {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((s, y as usize, !y as usize)),
        }
    }

    let mut threshold = f64::INFINITY;
    let mut next = 0;
    if n_pos > allowed {
        let mut caught = 0;
        while n_pos - caught > allowed {
            caught += groups[next].1;
            threshold = groups[next].0;
            next += 1;
        }
    }
    while next < groups.len() && groups[next].2 == 0 {
        threshold = groups[next].0;
        next += 1;
    }
    let confusion = confusion_at(preds, threshold);
    Ok(OperatingPoint {
        threshold,
        sensitivity: confusion.sensitivity(),
        confusion,
    })
}

/// Two models, each thresholded at the same false-negative rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub target_fnr: f64,
    pub a: OperatingPoint,
    pub b: OperatingPoint,
    /// `TN_b − TN_a`: additional correctly predicted successes.
    pub delta_tn: i64,
    pub delta_fp: i64,
    /// `delta_tn` relative to `TN_a`, in percent; `None` when `TN_a = 0`.
    pub delta_tn_pct: Option<f64>,
    pub delta_fp_pct: Option<f64>,
}

impl DeltaReport {
    pub fn to_csv(&self, name_a: &str, name_b: &str) -> String {
        let pct = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let mut s = String::from("model,threshold,sensitivity,tp,tn,fp,fn\n");
        for (name, op) in [(name_a, &self.a), (name_b, &self.b)] {
            let c = op.confusion;
            s.push_str(&format!(
                "{name},{},{},{},{},{},{}\n",
                op.threshold, op.sensitivity, c.tp, c.tn, c.fp, c.fn_
            ));
        }
        s.push_str(&format!(
            "delta,,,,{},{},\ndelta_pct,,,,{},{},\n",
            self.delta_tn,
            self.delta_fp,
            pct(self.delta_tn_pct),
            pct(self.delta_fp_pct)
        ));
        s
    }
}

pub fn compare_models_at_fnr(
    a: &PredictionSet,
    b: &PredictionSet,
    target_fnr: f64,
) -> Result<DeltaReport, MetricsError> {
    if a.len() != b.len() || a.positives() != b.positives() {
        return Err(MetricsError::Unpaired(
            "prediction sets differ in size or positives".into(),
        ));
    }
    let oa = threshold_at_fnr(a, target_fnr)?;
    let ob = threshold_at_fnr(b, target_fnr)?;
    let delta_tn = ob.confusion.tn as i64 - oa.confusion.tn as i64;
    let delta_fp = ob.confusion.fp as i64 - oa.confusion.fp as i64;
    let pct = |d: i64, base: usize| (base > 0).then(|| 100.0 * d as f64 / base as f64);
    Ok(DeltaReport {
        target_fnr,
        a: oa,
        b: ob,
        delta_tn,
        delta_fp,
        delta_tn_pct: pct(delta_tn, oa.confusion.tn),
        delta_fp_pct: pct(delta_fp, oa.confusion.fp),
    })
}
