//! Piecewise-linear relative-risk scoring in the style of the Kidney Donor
//! Risk Index.
//!
//! A [`RiskCoefficientSet`] is a list of log-hazard terms over record
//! fields. The score is `exp(Σ terms)`:
//!
//! | kind          | contribution                  |
//! |---------------|-------------------------------|
//! | `linear`      | `β · (x − knot)` (knot = 0 when omitted) |
//! | `hinge_above` | `β · max(0, x − knot)`        |
//! | `hinge_below` | `β · max(0, knot − x)`        |
//! | `indicator`   | `β · 1[x = level]` (level = 1 when omitted) |
//! | `step`        | `β · 1[x > knot]`             |
//!
//! Coefficients live in a TOML file with one `[[term]]` table per term and the
//! keys `feature`, `kind`, `knot`, `level` and `beta`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohort::{derive_label, Cohort, Field, Horizon, HorizonLabel, TransplantRecord};
use crate::metrics::{PredictionRow, PredictionSet};

#[derive(Debug, Error)]
pub enum KdriError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("duplicate term {0}")]
    DuplicateTerm(String),
    #[error("term {term}: {reason}")]
    InvalidTerm { term: String, reason: String },
    #[error("coefficient file: {0}")]
    Parse(String),
    #[error("record {record_id} has no value for `{feature}`")]
    MissingFeature { record_id: u64, feature: String },
    #[error("no labeled records at {0}")]
    NoLabeledRecords(Horizon),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Linear,
    HingeAbove,
    HingeBelow,
    Indicator,
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskTerm {
    pub feature: String,
    pub kind: TermKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knot: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    pub beta: f64,
}

impl fmt::Display for RiskTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:?}", self.feature, self.kind)?;
        if let Some(k) = self.knot {
            write!(f, "@{k}")?;
        }
        if let Some(l) = self.level {
            write!(f, "={l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Resolved {
    field: Field,
    kind: TermKind,
    knot: f64,
    level: f64,
    beta: f64,
}

impl Resolved {
    fn contribution(&self, x: f64) -> f64 {
        match self.kind {
            TermKind::Linear => self.beta * (x - self.knot),
            TermKind::HingeAbove => self.beta * (x - self.knot).max(0.0),
            TermKind::HingeBelow => self.beta * (self.knot - x).max(0.0),
            TermKind::Indicator => {
                if x == self.level {
                    self.beta
                } else {
                    0.0
                }
            }
            TermKind::Step => {
                if x > self.knot {
                    self.beta
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    term: Vec<RiskTerm>,
}

/// A validated list of risk terms.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCoefficientSet {
    name: String,
    terms: Vec<RiskTerm>,
    resolved: Vec<Resolved>,
}

impl RiskCoefficientSet {
    pub fn new(name: impl Into<String>, terms: Vec<RiskTerm>) -> Result<Self, KdriError> {
        let mut seen = HashSet::new();
        let mut resolved = Vec::with_capacity(terms.len());
        for t in &terms {
            let field = Field::from_name(&t.feature)
                .filter(|f| f.is_feature())
                .ok_or_else(|| KdriError::UnknownFeature(t.feature.clone()))?;
            let invalid = |reason: &str| KdriError::InvalidTerm {
                term: t.to_string(),
                reason: reason.to_string(),
            };
            if !t.beta.is_finite() {
                return Err(invalid("beta must be finite"));
            }
            let needs_knot = matches!(
                t.kind,
                TermKind::HingeAbove | TermKind::HingeBelow | TermKind::Step
            );
            let knot = match (t.knot, needs_knot) {
                (Some(k), _) if !k.is_finite() => return Err(invalid("knot must be finite")),
                (Some(k), _) => k,
                (None, true) => return Err(invalid("this kind needs a knot")),
                (None, false) => 0.0,
            };
            if t.level.is_some() && t.kind != TermKind::Indicator {
                return Err(invalid("only indicator terms take a level"));
            }
            let level = t.level.unwrap_or(1.0);
            if !level.is_finite() {
                return Err(invalid("level must be finite"));
            }
            let key = (
                field,
                t.kind,
                knot.to_bits(),
                if t.kind == TermKind::Indicator {
                    level.to_bits()
                } else {
                    0
                },
            );
            if !seen.insert(key) {
                return Err(KdriError::DuplicateTerm(t.to_string()));
            }
            resolved.push(Resolved {
                field,
                kind: t.kind,
                knot,
                level,
                beta: t.beta,
            });
        }
        Ok(RiskCoefficientSet {
            name: name.into(),
            terms,
            resolved,
        })
    }

    pub fn empty() -> Self {
        RiskCoefficientSet {
            name: "empty".into(),
            terms: Vec::new(),
            resolved: Vec::new(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, KdriError> {
        let file: CoefficientFile =
            toml::from_str(text).map_err(|e| KdriError::Parse(e.to_string()))?;
        Self::new(file.name.unwrap_or_else(|| "kdri".into()), file.term)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[RiskTerm] {
        &self.terms
    }

    /// Distinct fields referenced by at least one term.
    pub fn features(&self) -> Vec<Field> {
        let mut fs: Vec<Field> = self.resolved.iter().map(|r| r.field).collect();
        fs.sort();
        fs.dedup();
        fs
    }

    /// Log relative hazard `Σ terms`, summed in term order.
    pub fn log_risk(&self, record: &TransplantRecord) -> Result<f64, KdriError> {
        let mut sum = 0.0;
        for r in &self.resolved {
            let x = record
                .feature_value(r.field)
                .ok_or_else(|| KdriError::MissingFeature {
                    record_id: record.record_id,
                    feature: r.field.name().to_string(),
                })?;
            sum += r.contribution(x);
        }
        Ok(sum)
    }
}

pub fn load_coefficients(path: &Path) -> Result<RiskCoefficientSet, KdriError> {
    RiskCoefficientSet::from_toml_str(&std::fs::read_to_string(path)?)
}

/// Relative hazard; always positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct RiskScore(f64);

impl RiskScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn kdri_score(
    record: &TransplantRecord,
    coeffs: &RiskCoefficientSet,
) -> Result<RiskScore, KdriError> {
    Ok(RiskScore(coeffs.log_risk(record)?.exp()))
}

/// Scores every labeled record at `horizon`. Higher score means more likely
/// to fail; censored records are omitted.
pub fn kdri_as_classifier(
    cohort: &Cohort,
    coeffs: &RiskCoefficientSet,
    horizon: Horizon,
) -> Result<PredictionSet, KdriError> {
    let mut rows = Vec::new();
    for r in cohort.records() {
        let label = match derive_label(r, horizon) {
            HorizonLabel::Positive => true,
            HorizonLabel::Negative => false,
            HorizonLabel::Censored => continue,
        };
        rows.push(PredictionRow {
            record_id: r.record_id,
            score: kdri_score(r, coeffs)?.value(),
            positive: label,
            survival_months: r.graft_survival_months,
            event: r.graft_failed,
        });
    }
    PredictionSet::new(rows).map_err(|_| KdriError::NoLabeledRecords(horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::record::tests::sample_record;

    fn hinge_age() -> RiskCoefficientSet {
        RiskCoefficientSet::from_toml_str(
            r#"
            [[term]]
            feature = "donor_age"
            kind = "hinge_above"
            knot = 50
            beta = 0.02
            "#,
        )
        .unwrap()
    }

    fn aged(age: u32) -> TransplantRecord {
        TransplantRecord {
            donor_age: age,
            ..sample_record(1)
        }
    }

    #[test]
    fn empty_set_scores_one() {
        let set = RiskCoefficientSet::from_toml_str("").unwrap();
        assert!(set.terms().is_empty());
        assert_eq!(kdri_score(&sample_record(1), &set).unwrap().value(), 1.0);
    }

    #[test]
    fn zero_coefficients_score_one() {
        let set = RiskCoefficientSet::from_toml_str(
            r#"
            [[term]]
            feature = "donor_age"
            kind = "linear"
            beta = 0.0
            [[term]]
            feature = "dcd"
            kind = "indicator"
            beta = 0.0
            "#,
        )
        .unwrap();
        assert_eq!(kdri_score(&aged(70), &set).unwrap().value(), 1.0);
    }

    #[test]
    fn hinge_active_and_inactive() {
        let set = hinge_age();
        let s60 = kdri_score(&aged(60), &set).unwrap().value();
        assert!((s60 - 0.2f64.exp()).abs() < 1e-15);
        assert!((s60 - 1.2214).abs() < 1e-4);
        assert_eq!(kdri_score(&aged(40), &set).unwrap().value(), 1.0);
    }

    #[test]
    fn hinge_below_mirrors() {
        let set = RiskCoefficientSet::new(
            "t",
            vec![RiskTerm {
                feature: "donor_age".into(),
                kind: TermKind::HingeBelow,
                knot: Some(18.0),
                level: None,
                beta: 0.1,
            }],
        )
        .unwrap();
        assert_eq!(kdri_score(&aged(30), &set).unwrap().value(), 1.0);
        assert!((kdri_score(&aged(8), &set).unwrap().value() - 1f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn indicator_and_step() {
        let set = RiskCoefficientSet::from_toml_str(
            r#"
            [[term]]
            feature = "donor_race"
            kind = "indicator"
            level = 2
            beta = 0.5
            [[term]]
            feature = "donor_creatinine"
            kind = "step"
            knot = 1.5
            beta = 0.25
            "#,
        )
        .unwrap();
        let r = TransplantRecord {
            donor_race: 2,
            donor_creatinine: 1.6,
            ..sample_record(1)
        };
        assert!((set.log_risk(&r).unwrap() - 0.75).abs() < 1e-15);
        let r = TransplantRecord {
            donor_race: 1,
            donor_creatinine: 1.5,
            ..sample_record(1)
        };
        assert_eq!(set.log_risk(&r).unwrap(), 0.0);
    }

    #[test]
    fn rejects_unknown_feature() {
        let err = RiskCoefficientSet::from_toml_str(
            "[[term]]\nfeature = \"donor_shoe_size\"\nkind = \"linear\"\nbeta = 1.0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("donor_shoe_size"));
        // outcome columns are not features either
        assert!(RiskCoefficientSet::from_toml_str(
            "[[term]]\nfeature = \"graft_failed\"\nkind = \"linear\"\nbeta = 1.0\n"
        )
        .is_err());
    }

    #[test]
    fn rejects_duplicates_and_malformed() {
        let dup = r#"
            [[term]]
            feature = "donor_age"
            kind = "hinge_above"
            knot = 50
            beta = 0.01
            [[term]]
            feature = "donor_age"
            kind = "hinge_above"
            knot = 50
            beta = 0.02
        "#;
        assert!(matches!(
            RiskCoefficientSet::from_toml_str(dup),
            Err(KdriError::DuplicateTerm(_))
        ));
        let malformed = "[[term]]\nfeature = \"donor_age\"\nkind = \"linear\"\nbeta = \"big\"\n";
        assert!(matches!(
            RiskCoefficientSet::from_toml_str(malformed),
            Err(KdriError::Parse(_))
        ));
        let no_knot = "[[term]]\nfeature = \"donor_age\"\nkind = \"hinge_above\"\nbeta = 0.1\n";
        assert!(matches!(
            RiskCoefficientSet::from_toml_str(no_knot),
            Err(KdriError::InvalidTerm { .. })
        ));
    }

    #[test]
    fn older_donor_ranks_riskier() {
        let set = hinge_age();
        let mut young = aged(40);
        young.graft_survival_months = 100.0;
        let mut old = aged(60);
        old.record_id = 2;
        old.graft_survival_months = 5.0;
        old.graft_failed = true;
        let cohort = Cohort::new(vec![young, old], "t").unwrap();
        let preds = kdri_as_classifier(&cohort, &set, Horizon::Months12).unwrap();
        assert_eq!(preds.len(), 2);
        assert!(preds.rows()[1].score > preds.rows()[0].score);
    }

    #[test]
    fn classifier_skips_censored() {
        let mut rs: Vec<_> = (1..=5).map(sample_record).collect();
        rs[1].graft_survival_months = 3.0; // censored at GF12
        rs[3].graft_survival_months = 10.0;
        rs[3].graft_failed = true;
        let cohort = Cohort::new(rs, "t").unwrap();
        let preds = kdri_as_classifier(&cohort, &hinge_age(), Horizon::Months12).unwrap();
        assert_eq!(preds.len(), cohort.labeled(Horizon::Months12).count());
        assert_eq!(preds.len(), 4);

        let one = Cohort::new(vec![sample_record(9)], "t").unwrap();
        assert_eq!(
            kdri_as_classifier(&one, &hinge_age(), Horizon::Months12)
                .unwrap()
                .len(),
            1
        );
    }
}
