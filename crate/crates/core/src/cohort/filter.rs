use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Cohort, TransplantRecord};

/// Inclusive transplant-date window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        DateRange { start, end }
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

impl Default for DateRange {
    /// 1995-01-01 through 2005-12-31.
    fn default() -> Self {
        DateRange {
            start: NaiveDate::from_ymd_opt(1995, 1, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2005, 12, 31).unwrap(),
        }
    }
}

/// Exclusion rules in the order they are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExclusionRule {
    DateOutOfRange,
    Pediatric,
    PriorTransplant,
    MultiOrgan,
    AboIncompatible,
    InvalidHeight,
    InvalidWeight,
    InvalidCreatinine,
}

pub const HEIGHT_CM: (f64, f64) = (50.0, 213.0);
pub const WEIGHT_KG: (f64, f64) = (10.0, 175.0);
pub const CREATININE_MG_DL: (f64, f64) = (0.1, 8.0);
pub const ADULT_AGE: f64 = 18.0;

fn outside(v: f64, (lo, hi): (f64, f64)) -> bool {
    v < lo || v > hi
}

impl ExclusionRule {
    pub const ORDER: [ExclusionRule; 8] = [
        ExclusionRule::DateOutOfRange,
        ExclusionRule::Pediatric,
        ExclusionRule::PriorTransplant,
        ExclusionRule::MultiOrgan,
        ExclusionRule::AboIncompatible,
        ExclusionRule::InvalidHeight,
        ExclusionRule::InvalidWeight,
        ExclusionRule::InvalidCreatinine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExclusionRule::DateOutOfRange => "date_out_of_range",
            ExclusionRule::Pediatric => "pediatric",
            ExclusionRule::PriorTransplant => "prior_transplant",
            ExclusionRule::MultiOrgan => "multi_organ",
            ExclusionRule::AboIncompatible => "abo_incompatible",
            ExclusionRule::InvalidHeight => "invalid_height",
            ExclusionRule::InvalidWeight => "invalid_weight",
            ExclusionRule::InvalidCreatinine => "invalid_creatinine",
        }
    }

    fn label(self) -> &'static str {
        match self {
            ExclusionRule::DateOutOfRange => "Transplant date out of range",
            ExclusionRule::Pediatric => "Pediatric transplants",
            ExclusionRule::PriorTransplant => "Previous transplants",
            ExclusionRule::MultiOrgan => "Multi-organ transplants",
            ExclusionRule::AboIncompatible => "ABO incompatible transplants",
            ExclusionRule::InvalidHeight => "Invalid/missing donor height",
            ExclusionRule::InvalidWeight => "Invalid/missing donor weight",
            ExclusionRule::InvalidCreatinine => "Invalid/missing donor creatinine",
        }
    }

    pub fn violated_by(self, r: &TransplantRecord, range: &DateRange) -> bool {
        match self {
            ExclusionRule::DateOutOfRange => !range.contains(r.transplant_date),
            ExclusionRule::Pediatric => r.recipient_age < ADULT_AGE,
            ExclusionRule::PriorTransplant => r.recipient_prior_transplant,
            ExclusionRule::MultiOrgan => r.multi_organ,
            ExclusionRule::AboIncompatible => r.abo_incompatible,
            ExclusionRule::InvalidHeight => outside(r.donor_height, HEIGHT_CM),
            ExclusionRule::InvalidWeight => outside(r.donor_weight, WEIGHT_KG),
            ExclusionRule::InvalidCreatinine => outside(r.donor_creatinine, CREATININE_MG_DL),
        }
    }

    /// First rule in [`ExclusionRule::ORDER`] that the record violates.
    pub fn first_violation(r: &TransplantRecord, range: &DateRange) -> Option<ExclusionRule> {
        Self::ORDER
            .into_iter()
            .find(|rule| rule.violated_by(r, range))
    }
}

/// Audit trail of an [`apply_filters`] pass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub initial_count: usize,
    pub date_out_of_range: usize,
    pub pediatric: usize,
    pub prior_transplant: usize,
    pub multi_organ: usize,
    pub abo_incompatible: usize,
    pub invalid_height: usize,
    pub invalid_weight: usize,
    pub invalid_creatinine: usize,
    pub final_count: usize,
}

impl FilterReport {
    pub fn count(&self, rule: ExclusionRule) -> usize {
        match rule {
            ExclusionRule::DateOutOfRange => self.date_out_of_range,
            ExclusionRule::Pediatric => self.pediatric,
            ExclusionRule::PriorTransplant => self.prior_transplant,
            ExclusionRule::MultiOrgan => self.multi_organ,
            ExclusionRule::AboIncompatible => self.abo_incompatible,
            ExclusionRule::InvalidHeight => self.invalid_height,
            ExclusionRule::InvalidWeight => self.invalid_weight,
            ExclusionRule::InvalidCreatinine => self.invalid_creatinine,
        }
    }

    fn bump(&mut self, rule: ExclusionRule) {
        let slot = match rule {
            ExclusionRule::DateOutOfRange => &mut self.date_out_of_range,
            ExclusionRule::Pediatric => &mut self.pediatric,
            ExclusionRule::PriorTransplant => &mut self.prior_transplant,
            ExclusionRule::MultiOrgan => &mut self.multi_organ,
            ExclusionRule::AboIncompatible => &mut self.abo_incompatible,
            ExclusionRule::InvalidHeight => &mut self.invalid_height,
            ExclusionRule::InvalidWeight => &mut self.invalid_weight,
            ExclusionRule::InvalidCreatinine => &mut self.invalid_creatinine,
        };
        *slot += 1;
    }

    pub fn total_excluded(&self) -> usize {
        ExclusionRule::ORDER.iter().map(|&r| self.count(r)).sum()
    }

    /// `initial_count == final_count + Σ counters`.
    pub fn reconciles(&self) -> bool {
        self.initial_count == self.final_count + self.total_excluded()
    }

    /// Two-column `rule,count` CSV, initial and final counts included.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rule,count\n");
        out.push_str(&format!("initial_count,{}\n", self.initial_count));
        for rule in ExclusionRule::ORDER {
            out.push_str(&format!("{},{}\n", rule.name(), self.count(rule)));
        }
        out.push_str(&format!("final_count,{}\n", self.final_count));
        out
    }
}

impl fmt::Display for FilterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<36} {:>8}", "Removed observations", "Count")?;
        writeln!(f, "{:<36} {:>8}", "Initial data", self.initial_count)?;
        for rule in ExclusionRule::ORDER {
            writeln!(f, "{:<36} {:>8}", rule.label(), self.count(rule))?;
        }
        write!(f, "{:<36} {:>8}", "Final study sample", self.final_count)
    }
}

/// Applies the exclusion rules in sequence; each removed record is charged
/// to the first rule it violates. Height, weight and creatinine bounds are
/// inclusive of their endpoints.
pub fn apply_filters(cohort: &Cohort, range: &DateRange) -> (Cohort, FilterReport) {
    let mut report = FilterReport {
        initial_count: cohort.len(),
        ..FilterReport::default()
    };
    let mut kept = Vec::with_capacity(cohort.len());
    for r in cohort.records() {
        match ExclusionRule::first_violation(r, range) {
            Some(rule) => report.bump(rule),
            None => kept.push(r.clone()),
        }
    }
    report.final_count = kept.len();
    let provenance = format!(
        "{} | filtered {}..{}",
        cohort.provenance(),
        range.start,
        range.end
    );
    (Cohort::from_subset(kept, provenance), report)
}
