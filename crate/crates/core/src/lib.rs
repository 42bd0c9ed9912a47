//! Graft-failure risk modelling for kidney transplant cohorts.
//!
//! The crate covers the whole evaluation pipeline: cohort validation and
//! exclusion filtering ([`cohort`]), a coefficient-driven donor risk index
//! ([`kdri`]), a balanced-bootstrap random forest ([`forest`]), stratified
//! cross-validation with ROC, DeLong and fixed-FNR analysis ([`metrics`]),
//! and Kaplan-Meier / log-rank survival comparison ([`survival`]).
//!
//! ```
//! use graftrisk::cohort::{apply_filters, generate_synthetic_cohort, DateRange, Horizon, SyntheticConfig};
//! use graftrisk::kdri::RiskCoefficientSet;
//! use graftrisk::metrics::{auc, cross_validate, ModelSpec};
//!
//! let config = SyntheticConfig { n: 300, ..SyntheticConfig::default() };
//! let cohort = generate_synthetic_cohort(&config, 7).unwrap();
//! let (filtered, report) = apply_filters(&cohort, &DateRange::default());
//! assert!(report.reconciles());
//!
//! let spec = ModelSpec::Kdri(RiskCoefficientSet::empty());
//! let cv = cross_validate(&filtered, &spec, Horizon::Months36, 5, 1).unwrap();
//! // every donor scores 1.0 under an empty coefficient set
//! assert_eq!(auc(&cv.predictions).unwrap(), 0.5);
//! ```

pub mod cohort;
pub mod forest;
pub mod kdri;
pub mod metrics;
pub mod rng;
pub mod survival;

// The guide's snippets run as doctests so the book cannot drift.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cohorts.md")]
    mod cohorts {}
    #[doc = include_str!("../../../book/src/risk_index.md")]
    mod risk_index {}
    #[doc = include_str!("../../../book/src/forest.md")]
    mod forest {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cross_validation.md")]
    mod cross_validation {}
    #[doc = include_str!("../../../book/src/survival.md")]
    mod survival {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}

use thiserror::Error;

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Cohort(#[from] cohort::CohortError),
    #[error(transparent)]
    Kdri(#[from] kdri::KdriError),
    #[error(transparent)]
    Forest(#[from] forest::ForestError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Survival(#[from] survival::SurvivalError),
}
