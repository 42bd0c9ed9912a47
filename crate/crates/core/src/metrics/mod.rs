//! Cross-validation and classification evaluation over pooled out-of-fold
//! predictions: ROC/AUC, DeLong's paired test, fixed-FNR operating points
//! and confusion-matrix deltas.

mod cv;
mod delong;
pub mod normal;
mod predictions;
mod roc;
mod threshold;

use thiserror::Error;

pub use cv::{cross_validate, sweep_forest, CrossValidation, FoldAssignment, FoldPlan, ModelSpec};
pub use delong::{delong_test, placements, DeLongResult, Placements};
pub use predictions::{PredictionRow, PredictionSet, ScoredFollowUp};
pub use roc::{auc, roc_curve, RocCurve, RocPoint};
pub use threshold::{
    compare_models_at_fnr, confusion_at, max_false_negatives, threshold_at_fnr, ConfusionMatrix,
    DeltaReport, OperatingPoint,
};

use crate::forest::ForestError;
use crate::kdri::KdriError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("prediction set is empty")]
    Empty,
    #[error("duplicate record id {0} in predictions")]
    DuplicateId(u64),
    #[error("record {0} has a non-finite score")]
    NonFiniteScore(u64),
    #[error("predictions contain a single class")]
    SingleClass,
    #[error("predictions contain no positives")]
    NoPositives,
    #[error("target false-negative rate {0} is outside [0, 1]")]
    InvalidTarget(f64),
    #[error("unpaired prediction sets: {0}")]
    Unpaired(String),
    #[error(
        "need at least 2 records per class, got {positives} positives and {negatives} negatives"
    )]
    TooFew { positives: usize, negatives: usize },
    #[error("{labeled} labeled records cannot fill {k} folds")]
    TooFewRecords { labeled: usize, k: usize },
    #[error("fold {fold}: training part has a single class")]
    FoldSingleClass { fold: usize },
    #[error("invalid fold count {0}")]
    InvalidFolds(usize),
    #[error("prediction file: {0}")]
    Parse(String),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Kdri(#[from] KdriError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
