//! Kaplan-Meier estimation and the two-group log-rank test.
//!
//! At a time where both events and censorings occur, the events are counted
//! first: censored subjects are still at risk at their own censoring time.

use serde::Serialize;
use thiserror::Error;

use crate::metrics::normal::chi2_1df_sf;
use crate::metrics::{PredictionSet, ScoredFollowUp};

#[derive(Debug, Error, PartialEq)]
pub enum SurvivalError {
    #[error("survival sample is empty")]
    Empty,
    #[error("invalid survival time {0}")]
    InvalidTime(f64),
    #[error("no events in either group")]
    NoEvents,
    #[error("log-rank variance is zero: no event time has both groups at risk")]
    ZeroVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalObservation {
    pub time: f64,
    /// `true` = graft failure observed, `false` = censored.
    pub event: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SurvivalSample {
    rows: Vec<SurvivalObservation>,
}

impl SurvivalSample {
    pub fn new(rows: Vec<SurvivalObservation>) -> Result<Self, SurvivalError> {
        if let Some(r) = rows.iter().find(|r| !r.time.is_finite() || r.time < 0.0) {
            return Err(SurvivalError::InvalidTime(r.time));
        }
        Ok(SurvivalSample { rows })
    }

    /// From `(time, event)` pairs.
    pub fn from_pairs(pairs: &[(f64, bool)]) -> Result<Self, SurvivalError> {
        Self::new(
            pairs
                .iter()
                .map(|&(time, event)| SurvivalObservation { time, event })
                .collect(),
        )
    }

    pub fn rows(&self) -> &[SurvivalObservation] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn events(&self) -> usize {
        self.rows.iter().filter(|r| r.event).count()
    }

    fn sorted(&self) -> Vec<SurvivalObservation> {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.time.total_cmp(&b.time));
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KmStep {
    pub time: f64,
    pub n_at_risk: usize,
    pub events: usize,
    /// `S(t)` from this time until the next step.
    pub survival: f64,
}

/// Product-limit survival curve, one step per distinct event time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmCurve {
    pub n: usize,
    pub steps: Vec<KmStep>,
}

impl KmCurve {
    /// `S(t)`; right-continuous, 1 before the first event.
    pub fn survival_at(&self, t: f64) -> f64 {
        let k = self.steps.partition_point(|s| s.time <= t);
        if k == 0 {
            1.0
        } else {
            self.steps[k - 1].survival
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,n_at_risk,events,survival\n");
        s.push_str(&format!("0,{},0,1\n", self.n));
        for st in &self.steps {
            s.push_str(&format!(
                "{},{},{},{}\n",
                st.time, st.n_at_risk, st.events, st.survival
            ));
        }
        s
    }
}

pub fn km_estimate(sample: &SurvivalSample) -> Result<KmCurve, SurvivalError> {
    if sample.is_empty() {
        return Err(SurvivalError::Empty);
    }
    let rows = sample.sorted();
    let mut at_risk = rows.len();
    let mut s = 1.0;
    let mut steps = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let t = rows[i].time;
        let (mut d, mut c) = (0, 0);
        while i < rows.len() && rows[i].time == t {
            if rows[i].event {
                d += 1;
            } else {
                c += 1;
            }
            i += 1;
        }
        if d > 0 {
            s *= 1.0 - d as f64 / at_risk as f64;
            steps.push(KmStep {
                time: t,
                n_at_risk: at_risk,
                events: d,
                survival: s,
            });
        }
        at_risk -= d + c;
    }
    Ok(KmCurve {
        n: rows.len(),
        steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRankResult {
    pub chi2: f64,
    pub p_value: f64,
    pub observed_a: f64,
    pub expected_a: f64,
    pub observed_b: f64,
    pub expected_b: f64,
    pub variance: f64,
}

/// Per-time contribution to the log-rank sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRankTerm {
    pub time: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub d_a: usize,
    pub d_b: usize,
    pub expected_a: f64,
    pub variance: f64,
}

/// The per-event-time table behind [`log_rank`].
pub fn log_rank_table(a: &SurvivalSample, b: &SurvivalSample) -> Vec<LogRankTerm> {
    let mut pooled: Vec<(f64, bool, bool)> = a
        .rows()
        .iter()
        .map(|r| (r.time, r.event, true))
        .chain(b.rows().iter().map(|r| (r.time, r.event, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (mut n_a, mut n_b) = (a.len(), b.len());
    let mut terms = Vec::new();
    let mut i = 0;
    while i < pooled.len() {
        let t = pooled[i].0;
        let (mut d_a, mut d_b, mut c_a, mut c_b) = (0, 0, 0, 0);
        while i < pooled.len() && pooled[i].0 == t {
            match (pooled[i].1, pooled[i].2) {
                (true, true) => d_a += 1,
                (true, false) => d_b += 1,
                (false, true) => c_a += 1,
                (false, false) => c_b += 1,
            }
            i += 1;
        }
        let d = d_a + d_b;
        if d > 0 {
            let n = (n_a + n_b) as f64;
            let df = d as f64;
            let variance = if n_a + n_b > 1 {
                df * (n_a * n_b) as f64 / (n * n) * (n - df) / (n - 1.0)
            } else {
                0.0
            };
            terms.push(LogRankTerm {
                time: t,
                n_a,
                n_b,
                d_a,
                d_b,
                expected_a: df * n_a as f64 / n,
                variance,
            });
        }
        n_a -= d_a + c_a;
        n_b -= d_b + c_b;
    }
    terms
}

pub fn log_rank(a: &SurvivalSample, b: &SurvivalSample) -> Result<LogRankResult, SurvivalError> {
    if a.is_empty() || b.is_empty() {
        return Err(SurvivalError::Empty);
    }
    let terms = log_rank_table(a, b);
    if terms.is_empty() {
        return Err(SurvivalError::NoEvents);
    }
    let observed_a = a.events() as f64;
    let observed_b = b.events() as f64;
    let expected_a: f64 = terms.iter().map(|t| t.expected_a).sum();
    let variance: f64 = terms.iter().map(|t| t.variance).sum();
    if variance <= 0.0 {
        return Err(SurvivalError::ZeroVariance);
    }
    let expected_b = observed_a + observed_b - expected_a;
    let diff = observed_a - expected_a;
    let chi2 = if diff == 0.0 {
        0.0
    } else {
        diff * diff / variance
    };
    Ok(LogRankResult {
        chi2,
        p_value: chi2_1df_sf(chi2),
        observed_a,
        expected_a,
        observed_b,
        expected_b,
        variance,
    })
}

/// Predicted-failure (`score >= threshold`) and predicted-success groups.
/// `extended` rows, typically records censored before the classification
/// horizon, are split by the same rule.
pub fn split_by_prediction(
    preds: &PredictionSet,
    threshold: f64,
    extended: &[ScoredFollowUp],
) -> (SurvivalSample, SurvivalSample) {
    let mut fail = Vec::new();
    let mut ok = Vec::new();
    let rows = preds
        .rows()
        .iter()
        .map(|r| (r.score, r.survival_months, r.event))
        .chain(
            extended
                .iter()
                .map(|r| (r.score, r.survival_months, r.event)),
        );
    for (score, time, event) in rows {
        let obs = SurvivalObservation { time, event };
        if score >= threshold {
            fail.push(obs);
        } else {
            ok.push(obs);
        }
    }
    (SurvivalSample { rows: fail }, SurvivalSample { rows: ok })
}
