//! Transplant cohorts: the record schema, Table-2-style exclusion filters,
//! horizon labels, CSV I/O and a seeded synthetic generator.

mod filter;
mod io;
mod label;
pub(crate) mod record;
mod synth;

use std::collections::HashSet;

use thiserror::Error;

pub use filter::{
    apply_filters, DateRange, ExclusionRule, FilterReport, ADULT_AGE, CREATININE_MG_DL, HEIGHT_CM,
    WEIGHT_KG,
};
pub use io::{parse_cohort, read_cohort, write_cohort, Schema};
pub use label::{derive_label, Horizon, HorizonLabel};
pub use record::{validate_record, Field, FieldKind, TransplantRecord};
pub use synth::{generate_synthetic_cohort, Distribution, SyntheticConfig};

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("invalid value {value:?} for `{field}`: {reason}")]
    InvalidValue {
        field: String,
        value: String,
        reason: String,
    },
    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<CohortError>,
    },
    #[error("{} invalid rows; first: {}", .0.len(), .0[0])]
    Rows(Vec<CohortError>),
    #[error("duplicate record_id {0}")]
    DuplicateId(u64),
    #[error("bad header: {0}")]
    Header(String),
    #[error("synthetic config: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An ordered, id-unique collection of transplant records.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    records: Vec<TransplantRecord>,
    provenance: String,
}

impl Cohort {
    pub fn new(
        records: Vec<TransplantRecord>,
        provenance: impl Into<String>,
    ) -> Result<Self, CohortError> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.record_id) {
                return Err(CohortError::DuplicateId(r.record_id));
            }
        }
        Ok(Cohort {
            records,
            provenance: provenance.into(),
        })
    }

    pub fn empty(provenance: impl Into<String>) -> Self {
        Cohort {
            records: Vec::new(),
            provenance: provenance.into(),
        }
    }

    pub fn records(&self) -> &[TransplantRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records that carry a label at `horizon`, paired with it. Censored
    /// records are skipped.
    pub fn labeled(&self, horizon: Horizon) -> impl Iterator<Item = (&TransplantRecord, bool)> {
        self.records
            .iter()
            .filter_map(move |r| match derive_label(r, horizon) {
                HorizonLabel::Positive => Some((r, true)),
                HorizonLabel::Negative => Some((r, false)),
                HorizonLabel::Censored => None,
            })
    }

    // Subsets keep ids unique, so no re-validation.
    pub(crate) fn from_subset(records: Vec<TransplantRecord>, provenance: String) -> Self {
        Cohort {
            records,
            provenance,
        }
    }
}
