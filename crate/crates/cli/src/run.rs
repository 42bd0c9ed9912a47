use std::path::Path;

use graftrisk::cohort::{
    apply_filters, generate_synthetic_cohort, parse_cohort, write_cohort, Cohort, DateRange,
    FilterReport, Horizon, Schema, SyntheticConfig,
};
use graftrisk::forest::{train_forest, variable_importance, Dataset, ForestModel, ForestParams};
use graftrisk::metrics::{
    auc, compare_models_at_fnr, cross_validate, delong_test, roc_curve, sweep_forest,
    threshold_at_fnr, CrossValidation, ModelSpec,
};
use graftrisk::rng::derive_seed;
use graftrisk::survival::{km_estimate, log_rank, split_by_prediction};

use crate::config::{Input, RunConfig, SurvivalPopulation};
use crate::summary::{
    DeLongSummary, DeltaSummary, HorizonSummary, LogRankSummary, ModelSummary, RunSummary,
};
use crate::{Artifact, CliError, StageExt};

/// Stream for the forest refit on all labeled records; fold forests use
/// streams `0..k`.
const FULL_FIT_STREAM: u64 = u64::MAX - 1;

pub struct FilterOutput {
    pub report: FilterReport,
    pub artifacts: Vec<Artifact>,
}

fn cohort_csv(c: &Cohort) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_cohort(c, &mut buf).stage(|| "writing cohort".into())?;
    Ok(buf)
}

/// Filters a cohort file; artifacts are `filtered.csv` and `filter_report.csv`.
pub fn cmd_filter(input: &Path, range: &DateRange) -> Result<FilterOutput, CliError> {
    let cohort = parse_cohort(input, &Schema::canonical())
        .stage(|| format!("reading {}", input.display()))?;
    let (kept, report) = apply_filters(&cohort, range);
    Ok(FilterOutput {
        artifacts: vec![
            Artifact::new("filtered.csv", cohort_csv(&kept)?),
            Artifact::new("filter_report.csv", report.to_csv()),
        ],
        report,
    })
}

/// Generates a synthetic cohort; the artifact is `cohort.csv`.
pub fn cmd_synth(config: &SyntheticConfig, seed: u64) -> Result<(Cohort, Vec<Artifact>), CliError> {
    let cohort = generate_synthetic_cohort(config, seed).stage(|| "generating cohort".into())?;
    let csv = cohort_csv(&cohort)?;
    Ok((cohort, vec![Artifact::new("cohort.csv", csv)]))
}

fn load_cohort(cfg: &RunConfig) -> Result<(Cohort, Option<FilterReport>), CliError> {
    let cohort = match &cfg.input {
        Input::Cohort(path) => parse_cohort(path, &Schema::canonical())
            .stage(|| format!("reading {}", path.display()))?,
        Input::Synthetic { config, .. } => {
            generate_synthetic_cohort(config, cfg.seed).stage(|| "generating cohort".into())?
        }
    };
    if cfg.filter {
        let (kept, report) = apply_filters(&cohort, &cfg.date_range);
        Ok((kept, Some(report)))
    } else {
        Ok((cohort, None))
    }
}

pub struct RunOutput {
    pub summary: RunSummary,
    pub artifacts: Vec<Artifact>,
}

fn full_fit(
    cohort: &Cohort,
    features: &[graftrisk::cohort::Field],
    params: &ForestParams,
    horizon: Horizon,
    seed: u64,
) -> Result<ForestModel, CliError> {
    let data = Dataset::from_records(features, cohort.labeled(horizon))
        .stage(|| format!("{horizon}: building training set"))?;
    let params = ForestParams {
        seed: derive_seed(seed, FULL_FIT_STREAM),
        ..params.clone()
    };
    train_forest(&data, &params).stage(|| format!("{horizon}: training full forest"))
}

/// Cross-validates every model at every horizon. Nothing is written; the
/// caller writes [`RunOutput::artifacts`].
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let (cohort, report) = load_cohort(cfg)?;
    let mut artifacts = vec![Artifact::new("cohort.csv", cohort_csv(&cohort)?)];
    if let Some(r) = &report {
        artifacts.push(Artifact::new("filter_report.csv", r.to_csv()));
    }

    let mut horizons = Vec::new();
    for &h in &cfg.horizons {
        let dir = h.to_string();
        let mut results: Vec<(String, CrossValidation)> = Vec::new();
        let mut models = Vec::new();
        for m in &cfg.models {
            let stage = || format!("{h}, model `{}`", m.name);
            let cv = cross_validate(&cohort, &m.spec, h, cfg.folds, cfg.seed).stage(stage)?;
            let preds = &cv.predictions;
            let model_auc = auc(preds).stage(stage)?;
            let op = threshold_at_fnr(preds, cfg.target_fnr).stage(stage)?;

            let extended: &[_] = match cfg.survival_population {
                SurvivalPopulation::Extended => &cv.extended,
                SurvivalPopulation::Labeled => &[],
            };
            let (fail, ok) = split_by_prediction(preds, op.threshold, extended);
            let (log_rank_summary, note) = match log_rank(&fail, &ok) {
                Ok(r) => (
                    Some(LogRankSummary {
                        chi2: r.chi2,
                        p_value: r.p_value,
                        observed_failure_group: r.observed_a,
                        expected_failure_group: r.expected_a,
                    }),
                    None,
                ),
                Err(e) => (None, Some(e.to_string())),
            };
            for (group, sample) in [("predicted_failure", &fail), ("predicted_success", &ok)] {
                if let Ok(km) = km_estimate(sample) {
                    artifacts.push(Artifact::new(
                        format!("{dir}/km_{}_{group}.csv", m.name),
                        km.to_csv(),
                    ));
                }
            }

            let mut pred_csv = Vec::new();
            preds.write_csv(&mut pred_csv).stage(stage)?;
            artifacts.push(Artifact::new(
                format!("{dir}/predictions_{}.csv", m.name),
                pred_csv,
            ));
            artifacts.push(Artifact::new(
                format!("{dir}/roc_{}.csv", m.name),
                roc_curve(preds).stage(stage)?.to_csv(),
            ));

            let (kind, importance) = match &m.spec {
                ModelSpec::Kdri(_) => ("kdri", None),
                ModelSpec::Forest { features, params } => {
                    let model = full_fit(&cohort, features, params, h, cfg.seed)?;
                    if cfg.save_models {
                        artifacts.push(Artifact::new(
                            format!("{dir}/model_{}.json", m.name),
                            model.to_json(),
                        ));
                    }
                    ("forest", Some(variable_importance(&model)))
                }
            };
            models.push(ModelSummary {
                name: m.name.clone(),
                kind: kind.into(),
                auc: model_auc,
                threshold: op.threshold.is_finite().then_some(op.threshold),
                sensitivity: op.sensitivity,
                confusion: op.confusion,
                predicted_failure_n: fail.len(),
                predicted_success_n: ok.len(),
                log_rank: log_rank_summary,
                log_rank_note: note,
                importance,
            });
            results.push((m.name.clone(), cv));
        }

        let mut delong = Vec::new();
        for i in 0..results.len() {
            for j in i + 1..results.len() {
                let (a, b) = (&results[i], &results[j]);
                let r = delong_test(&a.1.predictions, &b.1.predictions)
                    .stage(|| format!("{h}: DeLong {} vs {}", a.0, b.0))?;
                delong.push(DeLongSummary {
                    model_a: a.0.clone(),
                    model_b: b.0.clone(),
                    auc_a: r.auc_a,
                    auc_b: r.auc_b,
                    z: r.z.is_finite().then_some(r.z),
                    p_value: r.p_value,
                });
            }
        }

        let mut deltas = Vec::new();
        let base = &results[0];
        for other in &results[1..] {
            let d =
                compare_models_at_fnr(&base.1.predictions, &other.1.predictions, cfg.target_fnr)
                    .stage(|| format!("{h}: delta {} vs {}", other.0, base.0))?;
            artifacts.push(Artifact::new(
                format!("{dir}/delta_{}_vs_{}.csv", other.0, base.0),
                d.to_csv(&base.0, &other.0),
            ));
            deltas.push(DeltaSummary {
                baseline: base.0.clone(),
                model: other.0.clone(),
                delta_tn: d.delta_tn,
                delta_fp: d.delta_fp,
                delta_tn_pct: d.delta_tn_pct,
                delta_fp_pct: d.delta_fp_pct,
            });
        }

        let first = &results[0].1;
        horizons.push(HorizonSummary {
            horizon: dir,
            labeled: first.predictions.len(),
            positives: first.predictions.positives(),
            censored_before_horizon: first.extended.len(),
            models,
            delong,
            delta_tn: deltas,
        });
    }

    let mut summary = RunSummary {
        seed: cfg.seed,
        folds: cfg.folds,
        target_fnr: cfg.target_fnr,
        survival_population: match cfg.survival_population {
            SurvivalPopulation::Extended => "extended".into(),
            SurvivalPopulation::Labeled => "labeled".into(),
        },
        provenance: cohort.provenance().to_string(),
        filter: report,
        cohort_size: cohort.len(),
        horizons,
        files: Vec::new(),
    };
    let mut files: Vec<String> = artifacts
        .iter()
        .map(|a| a.path.to_string_lossy().into_owned())
        .collect();
    files.push("summary.json".into());
    files.push("summary.txt".into());
    summary.files = files;
    artifacts.push(Artifact::new("summary.json", summary.to_json()));
    artifacts.push(Artifact::new("summary.txt", summary.to_table()));
    Ok(RunOutput { summary, artifacts })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n_trees: usize,
    pub auc: f64,
}

pub struct SweepOutput {
    pub model: String,
    pub horizon: Horizon,
    pub rows: Vec<SweepRow>,
    pub artifacts: Vec<Artifact>,
}

impl SweepOutput {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_trees,auc\n");
        for r in &self.rows {
            s.push_str(&format!("{},{}\n", r.n_trees, r.auc));
        }
        s
    }
}

/// Cross-validated AUC of one forest model at each tree count, with shared
/// folds and seed. The artifact is `sweep.csv`.
pub fn run_sweep(cfg: &RunConfig, tree_counts: &[usize]) -> Result<SweepOutput, CliError> {
    let model =
        match &cfg.sweep.model {
            Some(name) => cfg.models.iter().find(|m| &m.name == name).ok_or_else(|| {
                CliError::Config(format!("sweep model `{name}` is not configured"))
            })?,
            None => cfg
                .models
                .iter()
                .find(|m| matches!(m.spec, ModelSpec::Forest { .. }))
                .ok_or_else(|| CliError::Config("sweep needs a forest model".into()))?,
        };
    let (features, params) = match &model.spec {
        ModelSpec::Forest { features, params } => (features, params),
        ModelSpec::Kdri(_) => {
            return Err(CliError::Config(format!(
                "sweep model `{}` is not a forest",
                model.name
            )))
        }
    };
    if tree_counts.is_empty() || tree_counts.contains(&0) {
        return Err(CliError::Config("tree counts must be positive".into()));
    }
    let horizon = cfg.sweep.horizon.unwrap_or(cfg.horizons[0]);
    let (cohort, _) = load_cohort(cfg)?;
    let swept = sweep_forest(
        &cohort,
        features,
        params,
        horizon,
        cfg.folds,
        cfg.seed,
        tree_counts,
    )
    .stage(|| format!("{horizon}: sweeping `{}`", model.name))?;
    let rows = swept
        .iter()
        .map(|(n, cv)| {
            Ok(SweepRow {
                n_trees: *n,
                auc: auc(&cv.predictions).stage(|| format!("{n} trees"))?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut out = SweepOutput {
        model: model.name.clone(),
        horizon,
        rows,
        artifacts: Vec::new(),
    };
    out.artifacts.push(Artifact::new("sweep.csv", out.to_csv()));
    Ok(out)
}
