use std::collections::HashMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::CohortError;

/// One deceased-donor kidney transplant: donor covariates, recipient
/// covariates, exclusion flags and the graft follow-up.
///
/// `graft_failed == false` means the graft was censored at
/// `graft_survival_months`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransplantRecord {
    pub record_id: u64,
    pub donor_age: u32,
    pub donor_race: u32,
    pub donor_hypertension: bool,
    pub donor_diabetes: bool,
    pub donor_creatinine: f64,
    pub donor_cod_cva: bool,
    pub donor_height: f64,
    pub donor_weight: f64,
    pub dcd: bool,
    pub donor_hcv: bool,
    pub hla_b_mismatch: u8,
    pub hla_dr_mismatch: u8,
    pub en_bloc: bool,
    pub double_kidney: bool,
    pub cold_ischemia_hours: f64,
    pub recipient_age: f64,
    pub recipient_age_at_waitlisting: f64,
    pub recipient_diabetes: bool,
    pub recipient_dialysis_years: f64,
    pub recipient_prior_transplant: bool,
    pub multi_organ: bool,
    pub abo_incompatible: bool,
    pub transplant_date: NaiveDate,
    pub graft_survival_months: f64,
    pub graft_failed: bool,
}

/// Every column of the cohort file, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    RecordId,
    DonorAge,
    DonorRace,
    DonorHypertension,
    DonorDiabetes,
    DonorCreatinine,
    DonorCodCva,
    DonorHeight,
    DonorWeight,
    Dcd,
    DonorHcv,
    HlaBMismatch,
    HlaDrMismatch,
    EnBloc,
    DoubleKidney,
    ColdIschemiaHours,
    RecipientAge,
    RecipientAgeAtWaitlisting,
    RecipientDiabetes,
    RecipientDialysisYears,
    RecipientPriorTransplant,
    MultiOrgan,
    AboIncompatible,
    TransplantDate,
    GraftSurvivalMonths,
    GraftFailed,
}

/// How a field's value is interpreted when it is used as a model feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Numeric,
    Boolean,
    Categorical,
    /// Identifiers, dates and outcomes: never model inputs.
    NonFeature,
}

impl Field {
    pub const ALL: [Field; 26] = [
        Field::RecordId,
        Field::DonorAge,
        Field::DonorRace,
        Field::DonorHypertension,
        Field::DonorDiabetes,
        Field::DonorCreatinine,
        Field::DonorCodCva,
        Field::DonorHeight,
        Field::DonorWeight,
        Field::Dcd,
        Field::DonorHcv,
        Field::HlaBMismatch,
        Field::HlaDrMismatch,
        Field::EnBloc,
        Field::DoubleKidney,
        Field::ColdIschemiaHours,
        Field::RecipientAge,
        Field::RecipientAgeAtWaitlisting,
        Field::RecipientDiabetes,
        Field::RecipientDialysisYears,
        Field::RecipientPriorTransplant,
        Field::MultiOrgan,
        Field::AboIncompatible,
        Field::TransplantDate,
        Field::GraftSurvivalMonths,
        Field::GraftFailed,
    ];

    /// The donor variables of the published risk index.
    pub const DONOR_FEATURES: [Field; 15] = [
        Field::DonorAge,
        Field::DonorRace,
        Field::DonorHypertension,
        Field::DonorDiabetes,
        Field::DonorCreatinine,
        Field::DonorCodCva,
        Field::DonorHeight,
        Field::DonorWeight,
        Field::Dcd,
        Field::DonorHcv,
        Field::HlaBMismatch,
        Field::HlaDrMismatch,
        Field::EnBloc,
        Field::DoubleKidney,
        Field::ColdIschemiaHours,
    ];

    /// Recipient variables borrowed from the post-transplant survival score.
    pub const RECIPIENT_FEATURES: [Field; 4] = [
        Field::RecipientAge,
        Field::RecipientAgeAtWaitlisting,
        Field::RecipientDiabetes,
        Field::RecipientDialysisYears,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::RecordId => "record_id",
            Field::DonorAge => "donor_age",
            Field::DonorRace => "donor_race",
            Field::DonorHypertension => "donor_hypertension",
            Field::DonorDiabetes => "donor_diabetes",
            Field::DonorCreatinine => "donor_creatinine",
            Field::DonorCodCva => "donor_cod_cva",
            Field::DonorHeight => "donor_height",
            Field::DonorWeight => "donor_weight",
            Field::Dcd => "dcd",
            Field::DonorHcv => "donor_hcv",
            Field::HlaBMismatch => "hla_b_mismatch",
            Field::HlaDrMismatch => "hla_dr_mismatch",
            Field::EnBloc => "en_bloc",
            Field::DoubleKidney => "double_kidney",
            Field::ColdIschemiaHours => "cold_ischemia_hours",
            Field::RecipientAge => "recipient_age",
            Field::RecipientAgeAtWaitlisting => "recipient_age_at_waitlisting",
            Field::RecipientDiabetes => "recipient_diabetes",
            Field::RecipientDialysisYears => "recipient_dialysis_years",
            Field::RecipientPriorTransplant => "recipient_prior_transplant",
            Field::MultiOrgan => "multi_organ",
            Field::AboIncompatible => "abo_incompatible",
            Field::TransplantDate => "transplant_date",
            Field::GraftSurvivalMonths => "graft_survival_months",
            Field::GraftFailed => "graft_failed",
        }
    }

    pub fn from_name(name: &str) -> Option<Field> {
        Field::ALL.iter().copied().find(|f| f.name() == name)
    }

    pub fn kind(self) -> FieldKind {
        match self {
            Field::RecordId
            | Field::TransplantDate
            | Field::GraftSurvivalMonths
            | Field::GraftFailed => FieldKind::NonFeature,
            Field::DonorRace => FieldKind::Categorical,
            Field::DonorHypertension
            | Field::DonorDiabetes
            | Field::DonorCodCva
            | Field::Dcd
            | Field::DonorHcv
            | Field::EnBloc
            | Field::DoubleKidney
            | Field::RecipientDiabetes
            | Field::RecipientPriorTransplant
            | Field::MultiOrgan
            | Field::AboIncompatible => FieldKind::Boolean,
            _ => FieldKind::Numeric,
        }
    }

    /// Whether the field can feed a risk score or a forest.
    pub fn is_feature(self) -> bool {
        self.kind() != FieldKind::NonFeature
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn b(v: bool) -> f64 {
    if v {
        1.0
    } else {
        0.0
    }
}

impl TransplantRecord {
    /// Numeric value of a feature field (booleans as 0/1, race as its code).
    /// `None` for identifiers, dates and outcome columns.
    pub fn feature_value(&self, field: Field) -> Option<f64> {
        let v = match field {
            Field::DonorAge => self.donor_age as f64,
            Field::DonorRace => self.donor_race as f64,
            Field::DonorHypertension => b(self.donor_hypertension),
            Field::DonorDiabetes => b(self.donor_diabetes),
            Field::DonorCreatinine => self.donor_creatinine,
            Field::DonorCodCva => b(self.donor_cod_cva),
            Field::DonorHeight => self.donor_height,
            Field::DonorWeight => self.donor_weight,
            Field::Dcd => b(self.dcd),
            Field::DonorHcv => b(self.donor_hcv),
            Field::HlaBMismatch => self.hla_b_mismatch as f64,
            Field::HlaDrMismatch => self.hla_dr_mismatch as f64,
            Field::EnBloc => b(self.en_bloc),
            Field::DoubleKidney => b(self.double_kidney),
            Field::ColdIschemiaHours => self.cold_ischemia_hours,
            Field::RecipientAge => self.recipient_age,
            Field::RecipientAgeAtWaitlisting => self.recipient_age_at_waitlisting,
            Field::RecipientDiabetes => b(self.recipient_diabetes),
            Field::RecipientDialysisYears => self.recipient_dialysis_years,
            Field::RecipientPriorTransplant => b(self.recipient_prior_transplant),
            Field::MultiOrgan => b(self.multi_organ),
            Field::AboIncompatible => b(self.abo_incompatible),
            Field::RecordId
            | Field::TransplantDate
            | Field::GraftSurvivalMonths
            | Field::GraftFailed => return None,
        };
        Some(v)
    }

    /// Canonical text of every column, in [`Field::ALL`] order.
    pub fn to_row(&self) -> Vec<String> {
        Field::ALL.iter().map(|&f| self.cell(f)).collect()
    }

    fn cell(&self, field: Field) -> String {
        let flag = |v: bool| if v { "1".to_string() } else { "0".to_string() };
        match field {
            Field::RecordId => self.record_id.to_string(),
            Field::DonorAge => self.donor_age.to_string(),
            Field::DonorRace => self.donor_race.to_string(),
            Field::DonorHypertension => flag(self.donor_hypertension),
            Field::DonorDiabetes => flag(self.donor_diabetes),
            Field::DonorCreatinine => self.donor_creatinine.to_string(),
            Field::DonorCodCva => flag(self.donor_cod_cva),
            Field::DonorHeight => self.donor_height.to_string(),
            Field::DonorWeight => self.donor_weight.to_string(),
            Field::Dcd => flag(self.dcd),
            Field::DonorHcv => flag(self.donor_hcv),
            Field::HlaBMismatch => self.hla_b_mismatch.to_string(),
            Field::HlaDrMismatch => self.hla_dr_mismatch.to_string(),
            Field::EnBloc => flag(self.en_bloc),
            Field::DoubleKidney => flag(self.double_kidney),
            Field::ColdIschemiaHours => self.cold_ischemia_hours.to_string(),
            Field::RecipientAge => self.recipient_age.to_string(),
            Field::RecipientAgeAtWaitlisting => self.recipient_age_at_waitlisting.to_string(),
            Field::RecipientDiabetes => flag(self.recipient_diabetes),
            Field::RecipientDialysisYears => self.recipient_dialysis_years.to_string(),
            Field::RecipientPriorTransplant => flag(self.recipient_prior_transplant),
            Field::MultiOrgan => flag(self.multi_organ),
            Field::AboIncompatible => flag(self.abo_incompatible),
            Field::TransplantDate => self.transplant_date.format("%Y-%m-%d").to_string(),
            Field::GraftSurvivalMonths => self.graft_survival_months.to_string(),
            Field::GraftFailed => flag(self.graft_failed),
        }
    }
}

struct RowReader<'a> {
    row: &'a HashMap<String, String>,
}

impl RowReader<'_> {
    fn text(&self, field: Field) -> Result<&str, CohortError> {
        let raw = self
            .row
            .get(field.name())
            .ok_or_else(|| CohortError::MissingColumn(field.name().to_string()))?;
        let raw = raw.trim();
        if raw.is_empty() {
            return Err(invalid(field, raw, "missing value"));
        }
        Ok(raw)
    }

    fn int<T: std::str::FromStr>(&self, field: Field) -> Result<T, CohortError> {
        let raw = self.text(field)?;
        raw.parse()
            .map_err(|_| invalid(field, raw, "expected a non-negative integer"))
    }

    fn decimal(&self, field: Field) -> Result<f64, CohortError> {
        let raw = self.text(field)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(invalid(field, raw, "expected a finite decimal")),
        }
    }

    fn non_negative(&self, field: Field) -> Result<f64, CohortError> {
        let v = self.decimal(field)?;
        if v < 0.0 {
            return Err(invalid(field, self.text(field)?, "must be >= 0"));
        }
        Ok(v)
    }

    fn flag(&self, field: Field) -> Result<bool, CohortError> {
        match self.text(field)? {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(invalid(field, other, "expected 0 or 1")),
        }
    }

    fn mismatch(&self, field: Field) -> Result<u8, CohortError> {
        let v: u8 = self.int(field)?;
        if v > 2 {
            return Err(invalid(
                field,
                self.text(field)?,
                "mismatch count must be 0, 1 or 2",
            ));
        }
        Ok(v)
    }

    fn date(&self, field: Field) -> Result<NaiveDate, CohortError> {
        let raw = self.text(field)?;
        NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .map_err(|_| invalid(field, raw, "expected an ISO-8601 date (YYYY-MM-DD)"))
    }
}

fn invalid(field: Field, value: &str, reason: &str) -> CohortError {
    CohortError::InvalidValue {
        field: field.name().to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

/// Type-checks one raw row keyed by field name.
///
/// Only structural checks happen here (presence, parseability, mismatch
/// counts in 0..=2, non-negative durations). Clinical range exclusions are
/// the job of [`apply_filters`](super::apply_filters).
pub fn validate_record(raw: &HashMap<String, String>) -> Result<TransplantRecord, CohortError> {
    let r = RowReader { row: raw };
    Ok(TransplantRecord {
        record_id: r.int(Field::RecordId)?,
        donor_age: r.int(Field::DonorAge)?,
        donor_race: r.int(Field::DonorRace)?,
        donor_hypertension: r.flag(Field::DonorHypertension)?,
        donor_diabetes: r.flag(Field::DonorDiabetes)?,
        donor_creatinine: r.decimal(Field::DonorCreatinine)?,
        donor_cod_cva: r.flag(Field::DonorCodCva)?,
        donor_height: r.decimal(Field::DonorHeight)?,
        donor_weight: r.decimal(Field::DonorWeight)?,
        dcd: r.flag(Field::Dcd)?,
        donor_hcv: r.flag(Field::DonorHcv)?,
        hla_b_mismatch: r.mismatch(Field::HlaBMismatch)?,
        hla_dr_mismatch: r.mismatch(Field::HlaDrMismatch)?,
        en_bloc: r.flag(Field::EnBloc)?,
        double_kidney: r.flag(Field::DoubleKidney)?,
        cold_ischemia_hours: r.non_negative(Field::ColdIschemiaHours)?,
        recipient_age: r.non_negative(Field::RecipientAge)?,
        recipient_age_at_waitlisting: r.non_negative(Field::RecipientAgeAtWaitlisting)?,
        recipient_diabetes: r.flag(Field::RecipientDiabetes)?,
        recipient_dialysis_years: r.non_negative(Field::RecipientDialysisYears)?,
        recipient_prior_transplant: r.flag(Field::RecipientPriorTransplant)?,
        multi_organ: r.flag(Field::MultiOrgan)?,
        abo_incompatible: r.flag(Field::AboIncompatible)?,
        transplant_date: r.date(Field::TransplantDate)?,
        graft_survival_months: r.non_negative(Field::GraftSurvivalMonths)?,
        graft_failed: r.flag(Field::GraftFailed)?,
    })
}
