use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// One scored, labeled record. `positive` is graft failure at the horizon;
/// `survival_months`/`event` carry the full follow-up for survival analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub record_id: u64,
    pub score: f64,
    pub positive: bool,
    pub survival_months: f64,
    pub event: bool,
}

/// Pooled out-of-fold predictions: a ranked list input to every evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    rows: Vec<PredictionRow>,
}

impl PredictionSet {
    pub fn new(rows: Vec<PredictionRow>) -> Result<Self, MetricsError> {
        if rows.is_empty() {
            return Err(MetricsError::Empty);
        }
        let mut seen = HashSet::with_capacity(rows.len());
        for r in &rows {
            if !seen.insert(r.record_id) {
                return Err(MetricsError::DuplicateId(r.record_id));
            }
            if !r.score.is_finite() {
                return Err(MetricsError::NonFiniteScore(r.record_id));
            }
        }
        Ok(PredictionSet { rows })
    }

    pub fn rows(&self) -> &[PredictionRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.positive).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.score).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.positive).collect()
    }

    /// Same rows with every score mapped through `f`.
    pub fn map_scores(&self, f: impl Fn(f64) -> f64) -> Result<Self, MetricsError> {
        PredictionSet::new(
            self.rows
                .iter()
                .map(|r| PredictionRow {
                    score: f(r.score),
                    ..*r
                })
                .collect(),
        )
    }

    pub(crate) fn require_both_classes(&self) -> Result<(usize, usize), MetricsError> {
        let pos = self.positives();
        let neg = self.len() - pos;
        if pos == 0 || neg == 0 {
            return Err(MetricsError::SingleClass);
        }
        Ok((pos, neg))
    }

    /// `record_id,score,label,survival_months,event` with 0/1 flags.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), MetricsError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        w.write_record(["record_id", "score", "label", "survival_months", "event"])?;
        for r in &self.rows {
            w.write_record([
                r.record_id.to_string(),
                r.score.to_string(),
                (r.positive as u8).to_string(),
                r.survival_months.to_string(),
                (r.event as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, MetricsError> {
        #[derive(Deserialize)]
        struct Raw {
            record_id: u64,
            score: f64,
            label: u8,
            survival_months: f64,
            event: u8,
        }
        let flag = |v: u8, what: &str| match v {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(MetricsError::Parse(format!("{what} must be 0 or 1"))),
        };
        let mut rows = Vec::new();
        for raw in csv::Reader::from_reader(r).deserialize::<Raw>() {
            let raw = raw?;
            rows.push(PredictionRow {
                record_id: raw.record_id,
                score: raw.score,
                positive: flag(raw.label, "label")?,
                survival_months: raw.survival_months,
                event: flag(raw.event, "event")?,
            });
        }
        PredictionSet::new(rows)
    }
}

/// A scored record without a horizon label (censored before the horizon),
/// kept for the survival comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredFollowUp {
    pub record_id: u64,
    pub score: f64,
    pub survival_months: f64,
    pub event: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(id: u64, score: f64, positive: bool) -> PredictionRow {
        PredictionRow {
            record_id: id,
            score,
            positive,
            survival_months: 12.5,
            event: positive,
        }
    }

    #[test]
    fn rejects_empty_duplicates_and_nan() {
        assert!(matches!(
            PredictionSet::new(vec![]),
            Err(MetricsError::Empty)
        ));
        assert!(matches!(
            PredictionSet::new(vec![row(1, 0.1, true), row(1, 0.2, false)]),
            Err(MetricsError::DuplicateId(1))
        ));
        assert!(PredictionSet::new(vec![row(1, f64::NAN, true)]).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(scores in prop::collection::vec((-1e6f64..1e6, any::<bool>()), 1..40)) {
            let rows = scores
                .iter()
                .enumerate()
                .map(|(i, &(s, y))| row(i as u64, s, y))
                .collect();
            let set = PredictionSet::new(rows).unwrap();
            let mut buf = Vec::new();
            set.write_csv(&mut buf).unwrap();
            let back = PredictionSet::read_csv(&buf[..]).unwrap();
            prop_assert_eq!(back, set);
        }
    }
}
