use std::fmt::Write as _;

use graftrisk::cohort::FilterReport;
use graftrisk::metrics::ConfusionMatrix;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRankSummary {
    pub chi2: f64,
    pub p_value: f64,
    pub observed_failure_group: f64,
    pub expected_failure_group: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub name: String,
    pub kind: String,
    pub auc: f64,
    /// Scores at or above this are predicted failures; `null` means +∞.
    pub threshold: Option<f64>,
    pub sensitivity: f64,
    pub confusion: ConfusionMatrix,
    pub predicted_failure_n: usize,
    pub predicted_success_n: usize,
    pub log_rank: Option<LogRankSummary>,
    /// Why `log_rank` is missing, when it is.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_rank_note: Option<String>,
    /// Forest models only: importance from a forest trained on all labeled records.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub importance: Option<Vec<(String, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeLongSummary {
    pub model_a: String,
    pub model_b: String,
    pub auc_a: f64,
    pub auc_b: f64,
    pub z: Option<f64>,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSummary {
    pub baseline: String,
    pub model: String,
    pub delta_tn: i64,
    pub delta_fp: i64,
    pub delta_tn_pct: Option<f64>,
    pub delta_fp_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonSummary {
    pub horizon: String,
    pub labeled: usize,
    pub positives: usize,
    pub censored_before_horizon: usize,
    pub models: Vec<ModelSummary>,
    pub delong: Vec<DeLongSummary>,
    pub delta_tn: Vec<DeltaSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub folds: usize,
    pub target_fnr: f64,
    pub survival_population: String,
    pub provenance: String,
    pub filter: Option<FilterReport>,
    pub cohort_size: usize,
    pub horizons: Vec<HorizonSummary>,
    /// Every file written by the run, relative to the output directory.
    pub files: Vec<String>,
}

fn num(v: Option<f64>) -> String {
    v.map_or("inf".into(), |x| format!("{x:.4}"))
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "seed {}  folds {}  target FNR {}",
            self.seed, self.folds, self.target_fnr
        );
        let _ = writeln!(
            s,
            "cohort: {} records ({})",
            self.cohort_size, self.provenance
        );
        for h in &self.horizons {
            let _ = writeln!(
                s,
                "\n{}: {} labeled, {} failures, {} censored before horizon",
                h.horizon, h.labeled, h.positives, h.censored_before_horizon
            );
            let _ = writeln!(
                s,
                "  {:<20} {:>7} {:>10} {:>6} {:>6} {:>6} {:>6} {:>6} {:>10}",
                "model", "AUC", "threshold", "sens", "TP", "TN", "FP", "FN", "log-rank p"
            );
            for m in &h.models {
                let c = m.confusion;
                let lr = m
                    .log_rank
                    .as_ref()
                    .map_or("-".to_string(), |l| format!("{:.3e}", l.p_value));
                let _ = writeln!(
                    s,
                    "  {:<20} {:>7.4} {:>10} {:>6.3} {:>6} {:>6} {:>6} {:>6} {:>10}",
                    m.name,
                    m.auc,
                    num(m.threshold),
                    m.sensitivity,
                    c.tp,
                    c.tn,
                    c.fp,
                    c.fn_,
                    lr
                );
            }
            for d in &h.delong {
                let _ = writeln!(
                    s,
                    "  DeLong {} vs {}: AUC {:.4} vs {:.4}, p = {:.3e}",
                    d.model_a, d.model_b, d.auc_a, d.auc_b, d.p_value
                );
            }
            for d in &h.delta_tn {
                let pct = d
                    .delta_tn_pct
                    .map_or(String::new(), |p| format!(" ({p:+.1}%)"));
                let _ = writeln!(
                    s,
                    "  {} vs {}: {:+} true negatives{pct}, {:+} false positives",
                    d.model, d.baseline, d.delta_tn, d.delta_fp
                );
            }
        }
        s
    }
}
