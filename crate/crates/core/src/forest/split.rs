use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Dataset, ForestError};

/// Categorical features with more levels than this use one-vs-rest splits
/// instead of exhaustive subset enumeration.
pub const EXHAUSTIVE_LEVEL_LIMIT: usize = 10;

/// `1 − p₊² − p₋²`.
pub fn gini_impurity(positives: usize, negatives: usize) -> Result<f64, ForestError> {
    let n = positives + negatives;
    if n == 0 {
        return Err(ForestError::EmptyNode);
    }
    let p = positives as f64 / n as f64;
    let q = negatives as f64 / n as f64;
    Ok(1.0 - p * p - q * q)
}

fn gini(pos: u64, neg: u64) -> f64 {
    gini_impurity(pos as usize, neg as usize).expect("non-empty child")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTest {
    /// `x <= threshold` goes left.
    Threshold(f64),
    /// Membership in the (sorted) level set goes left.
    Levels(Vec<i64>),
}

impl SplitTest {
    pub fn goes_left(&self, x: f64) -> bool {
        match self {
            SplitTest::Threshold(t) => x <= *t,
            SplitTest::Levels(levels) => levels.binary_search(&(x as i64)).is_ok(),
        }
    }
}

/// A chosen partition of a node sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub test: SplitTest,
    /// Impurity decrease `G(parent) − (n_L/n)·G(L) − (n_R/n)·G(R)`.
    pub gain: f64,
    pub left: (u64, u64),
    pub right: (u64, u64),
}

/// `Σ_child (pos² + neg²) / n_child` as an exact fraction. Maximizing it is
/// the same as maximizing the Gini decrease.
#[derive(Debug, Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of(left: (u64, u64), right: (u64, u64)) -> Self {
        let q = |(a, b): (u64, u64)| (a as u128) * (a as u128) + (b as u128) * (b as u128);
        let nl = (left.0 + left.1) as u128;
        let nr = (right.0 + right.1) as u128;
        Purity {
            num: q(left) * nr + q(right) * nl,
            den: nl * nr,
        }
    }

    fn cmp(&self, other: &Purity) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    /// Strictly purer than the unsplit parent?
    fn beats_parent(&self, pos: u64, neg: u64) -> bool {
        let n = (pos + neg) as u128;
        let q = (pos as u128).pow(2) + (neg as u128).pow(2);
        self.num * n > q * self.den
    }
}

fn candidate(feature: usize, test: SplitTest, left: (u64, u64), right: (u64, u64)) -> Split {
    let n = (left.0 + left.1 + right.0 + right.1) as f64;
    let parent = gini(left.0 + right.0, left.1 + right.1);
    let nl = (left.0 + left.1) as f64;
    let nr = (right.0 + right.1) as f64;
    let gain = parent - nl / n * gini(left.0, left.1) - nr / n * gini(right.0, right.1);
    Split {
        feature,
        test,
        gain: gain.max(0.0),
        left,
        right,
    }
}

struct Best {
    purity: Purity,
    split: Split,
}

fn offer(best: &mut Option<Best>, purity: Purity, make: impl FnOnce() -> Split) {
    let better = match best {
        None => true,
        Some(b) => purity.cmp(&b.purity) == Ordering::Greater,
    };
    if better {
        *best = Some(Best {
            purity,
            split: make(),
        });
    }
}

fn counts(data: &Dataset, sample: &[u32]) -> (u64, u64) {
    let labels = data.labels();
    let pos = sample.iter().filter(|&&i| labels[i as usize]).count() as u64;
    (pos, sample.len() as u64 - pos)
}

fn scan_numeric(
    data: &Dataset,
    sample: &[u32],
    feature: usize,
    min_leaf: u64,
    total: (u64, u64),
    best: &mut Option<Best>,
) {
    let col = data.column(feature);
    let labels = data.labels();
    let mut pairs: Vec<(f64, bool)> = sample
        .iter()
        .map(|&i| (col[i as usize], labels[i as usize]))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut lp, mut ln) = (0u64, 0u64);
    for w in 0..pairs.len() - 1 {
        if pairs[w].1 {
            lp += 1;
        } else {
            ln += 1;
        }
        let (lo, hi) = (pairs[w].0, pairs[w + 1].0);
        if lo == hi {
            continue;
        }
        let left = (lp, ln);
        let right = (total.0 - lp, total.1 - ln);
        if lp + ln < min_leaf || right.0 + right.1 < min_leaf {
            continue;
        }
        let purity = Purity::of(left, right);
        offer(best, purity, || {
            let mid = lo + (hi - lo) / 2.0;
            let threshold = if mid >= hi { lo } else { mid };
            candidate(feature, SplitTest::Threshold(threshold), left, right)
        });
    }
}

fn scan_categorical(
    data: &Dataset,
    sample: &[u32],
    feature: usize,
    min_leaf: u64,
    total: (u64, u64),
    best: &mut Option<Best>,
) {
    let col = data.column(feature);
    let labels = data.labels();
    let mut per_level: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
    for &i in sample {
        let e = per_level.entry(col[i as usize] as i64).or_default();
        if labels[i as usize] {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    let levels: Vec<(i64, (u64, u64))> = per_level.into_iter().collect();
    let l = levels.len();
    if l < 2 {
        return;
    }
    let mut try_subset = |members: &mut dyn Iterator<Item = usize>| {
        let mut left = (0u64, 0u64);
        let mut set = Vec::new();
        for k in members {
            left.0 += levels[k].1 .0;
            left.1 += levels[k].1 .1;
            set.push(levels[k].0);
        }
        let right = (total.0 - left.0, total.1 - left.1);
        if left.0 + left.1 < min_leaf || right.0 + right.1 < min_leaf {
            return;
        }
        offer(best, Purity::of(left, right), || {
            candidate(feature, SplitTest::Levels(set), left, right)
        });
    };
    if l <= EXHAUSTIVE_LEVEL_LIMIT {
        // the last level always stays right, so each partition appears once
        for mask in 1u32..(1u32 << (l - 1)) {
            try_subset(&mut (0..l - 1).filter(|k| mask & (1 << k) != 0));
        }
    } else {
        for k in 0..l {
            try_subset(&mut std::iter::once(k));
        }
    }
}

/// Purest valid partition of `sample` over `features`, even when it does
/// not reduce impurity. `None` only when every feature is constant in the
/// node (or no partition respects `min_leaf`).
pub(crate) fn best_partition(
    data: &Dataset,
    sample: &[u32],
    features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    if sample.len() < 2 {
        return None;
    }
    let total = counts(data, sample);
    let min_leaf = min_leaf.max(1) as u64;
    let mut best = None;
    for &f in features {
        if data.specs()[f].is_categorical() {
            scan_categorical(data, sample, f, min_leaf, total, &mut best);
        } else {
            scan_numeric(data, sample, f, min_leaf, total, &mut best);
        }
    }
    best.map(|b| b.split)
}

/// The split over `features` with the largest Gini decrease, or `None` when
/// no candidate decreases impurity at all.
///
/// Numeric thresholds are midpoints between consecutive distinct values.
/// Categorical tests are level subsets: exhaustive up to
/// [`EXHAUSTIVE_LEVEL_LIMIT`] levels, one-vs-rest beyond. Ties keep the
/// first candidate in `features` order, then ascending threshold.
pub fn best_split(
    data: &Dataset,
    sample: &[u32],
    features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let (pos, neg) = counts(data, sample);
    if pos == 0 || neg == 0 {
        return None;
    }
    let split = best_partition(data, sample, features, min_leaf)?;
    Purity::of(split.left, split.right)
        .beats_parent(pos, neg)
        .then_some(split)
}
