//! Independent reference implementations used as test oracles. Each one is
//! written the slow, obvious way and shares no code with the library.
#![allow(dead_code)]

use graftrisk::metrics::{PredictionRow, PredictionSet};
use rand::Rng;

pub fn preds(scores: &[f64], labels: &[bool]) -> PredictionSet {
    PredictionSet::new(
        scores
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (&score, &positive))| PredictionRow {
                record_id: i as u64 + 1,
                score,
                positive,
                survival_months: 1.0 + i as f64,
                event: positive,
            })
            .collect(),
    )
    .unwrap()
}

/// Random labeled scores with both classes; scores are drawn from a small
/// grid so ties are common.
pub fn random_instance(rng: &mut impl Rng, n_max: usize) -> (Vec<f64>, Vec<bool>) {
    let n = rng.random_range(4..=n_max);
    let grid = rng.random_range(2..=20);
    loop {
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        let pos = labels.iter().filter(|&&y| y).count();
        if pos < 2 || n - pos < 2 {
            continue;
        }
        let scores = (0..n)
            .map(|_| rng.random_range(0..grid) as f64 / grid as f64)
            .collect();
        return (scores, labels);
    }
}

/// Mean over all positive/negative pairs of `[s₊ > s₋] + ½[s₊ = s₋]`.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                total += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    total / pairs
}

fn psi(x: f64, y: f64) -> f64 {
    if x > y {
        1.0
    } else if x == y {
        0.5
    } else {
        0.0
    }
}

pub struct DeLongOracle {
    pub auc_a: f64,
    pub auc_b: f64,
    pub var_a: f64,
    pub var_b: f64,
    pub cov: f64,
}

/// DeLong variances with every placement from a double loop.
pub fn delong_oracle(a: &[f64], b: &[f64], labels: &[bool]) -> DeLongOracle {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let (m, n) = (pos.len() as f64, neg.len() as f64);
    let v10 = |s: &[f64]| -> Vec<f64> {
        pos.iter()
            .map(|&i| neg.iter().map(|&j| psi(s[i], s[j])).sum::<f64>() / n)
            .collect()
    };
    let v01 = |s: &[f64]| -> Vec<f64> {
        neg.iter()
            .map(|&j| pos.iter().map(|&i| psi(s[i], s[j])).sum::<f64>() / m)
            .collect()
    };
    let cov = |x: &[f64], y: &[f64]| {
        let k = x.len() as f64;
        let mx = x.iter().sum::<f64>() / k;
        let my = y.iter().sum::<f64>() / k;
        x.iter()
            .zip(y)
            .map(|(p, q)| (p - mx) * (q - my))
            .sum::<f64>()
            / (k - 1.0)
    };
    let (a10, a01, b10, b01) = (v10(a), v01(a), v10(b), v01(b));
    DeLongOracle {
        auc_a: a10.iter().sum::<f64>() / m,
        auc_b: b10.iter().sum::<f64>() / m,
        var_a: cov(&a10, &a10) / m + cov(&a01, &a01) / n,
        var_b: cov(&b10, &b10) / m + cov(&b01, &b01) / n,
        cov: cov(&a10, &b10) / m + cov(&a01, &b01) / n,
    }
}

/// Scans every candidate threshold (each observed score and +∞) and returns
/// `(max TN, max TP at that TN)` among thresholds whose sensitivity is at
/// least `1 − target`.
pub fn exhaustive_threshold(scores: &[f64], labels: &[bool], target: f64) -> (usize, usize) {
    let n_pos = labels.iter().filter(|&&y| y).count();
    let mut cands: Vec<f64> = scores.to_vec();
    cands.push(f64::INFINITY);
    let mut best: Option<(usize, usize)> = None;
    for &t in &cands {
        let tp = (0..scores.len())
            .filter(|&i| labels[i] && scores[i] >= t)
            .count();
        let tn = (0..scores.len())
            .filter(|&i| !labels[i] && scores[i] < t)
            .count();
        let fnr = (n_pos - tp) as f64 / n_pos as f64;
        if fnr <= target + 1e-12 && best.is_none_or(|b| (tn, tp) > b) {
            best = Some((tn, tp));
        }
    }
    best.expect("the lowest score always qualifies")
}

fn gini(p: f64, n: f64) -> f64 {
    let t = p + n;
    1.0 - (p / t).powi(2) - (n / t).powi(2)
}

/// Best `(feature, threshold, gain)` over all midpoints of all numeric
/// columns, by direct Gini evaluation. `None` if nothing has positive gain.
pub fn exhaustive_split(cols: &[Vec<f64>], labels: &[bool]) -> Option<(usize, f64, f64)> {
    let np = labels.iter().filter(|&&y| y).count() as f64;
    let nn = labels.len() as f64 - np;
    let parent = gini(np, nn);
    let total = labels.len() as f64;
    let mut best: Option<(usize, f64, f64)> = None;
    for (j, col) in cols.iter().enumerate() {
        let mut vals = col.clone();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (mut lp, mut ln, mut rp, mut rn) = (0.0, 0.0, 0.0, 0.0);
            for (i, &x) in col.iter().enumerate() {
                match (x <= t, labels[i]) {
                    (true, true) => lp += 1.0,
                    (true, false) => ln += 1.0,
                    (false, true) => rp += 1.0,
                    (false, false) => rn += 1.0,
                }
            }
            let gain = parent - (lp + ln) / total * gini(lp, ln) - (rp + rn) / total * gini(rp, rn);
            if gain > 1e-12 && best.is_none_or(|b| gain > b.2) {
                best = Some((j, t, gain));
            }
        }
    }
    best
}
