use std::collections::HashSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use graftrisk::cohort::{DateRange, Field, Horizon, SyntheticConfig};
use graftrisk::forest::ForestParams;
use graftrisk::kdri::load_coefficients;
use graftrisk::metrics::ModelSpec;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    #[serde(default = "default_folds")]
    folds: usize,
    #[serde(default = "default_horizons")]
    horizons: Vec<Horizon>,
    #[serde(default = "default_fnr")]
    target_fnr: f64,
    output_dir: Option<PathBuf>,
    #[serde(default = "yes")]
    filter: bool,
    date_start: Option<NaiveDate>,
    date_end: Option<NaiveDate>,
    #[serde(default)]
    survival_population: SurvivalPopulation,
    #[serde(default)]
    save_models: bool,
    input: RawInput,
    #[serde(default, rename = "model")]
    models: Vec<RawModel>,
    #[serde(default)]
    sweep: RawSweep,
}

fn default_folds() -> usize {
    10
}
fn default_horizons() -> Vec<Horizon> {
    vec![Horizon::Months12]
}
fn default_fnr() -> f64 {
    0.10
}
fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    cohort: Option<PathBuf>,
    synthetic: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    kind: String,
    coefficients: Option<PathBuf>,
    features: Option<Vec<String>>,
    n_trees: Option<usize>,
    mtry: Option<usize>,
    min_node: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    tree_counts: Option<Vec<usize>>,
    model: Option<String>,
    horizon: Option<Horizon>,
}

/// Which records enter the Kaplan-Meier groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalPopulation {
    /// Labeled records plus those censored before the horizon.
    #[default]
    Extended,
    /// Only records with a horizon label.
    Labeled,
}

#[derive(Debug, Clone)]
pub enum Input {
    Cohort(PathBuf),
    Synthetic {
        path: PathBuf,
        config: SyntheticConfig,
    },
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub name: String,
    pub spec: ModelSpec,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub tree_counts: Vec<usize>,
    pub model: Option<String>,
    pub horizon: Option<Horizon>,
}

/// A validated run configuration with paths resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub folds: usize,
    pub horizons: Vec<Horizon>,
    pub target_fnr: f64,
    pub output_dir: Option<PathBuf>,
    pub filter: bool,
    pub date_range: DateRange,
    pub survival_population: SurvivalPopulation,
    pub save_models: bool,
    pub input: Input,
    pub models: Vec<ModelConfig>,
    pub sweep: SweepConfig,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Expands `donor` and `recipient` into their field groups; anything else
/// must be a feature name.
pub fn resolve_features(names: &[String]) -> Result<Vec<Field>, CliError> {
    let mut out = Vec::new();
    for name in names {
        let group: Vec<Field> = match name.as_str() {
            "donor" => Field::DONOR_FEATURES.to_vec(),
            "recipient" => Field::RECIPIENT_FEATURES.to_vec(),
            other => match Field::from_name(other) {
                Some(f) if f.is_feature() => vec![f],
                _ => return Err(bad(format!("unknown feature `{other}`"))),
            },
        };
        for f in group {
            if !out.contains(&f) {
                out.push(f);
            }
        }
    }
    if out.is_empty() {
        return Err(bad("forest model needs at least one feature"));
    }
    Ok(out)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory. `seed` overrides the file's seed.
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base, seed)
    }

    pub fn from_toml_str(text: &str, base: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        let seed = seed
            .or(raw.seed)
            .ok_or_else(|| bad("a seed is required (config `seed` or --seed)"))?;
        if raw.folds < 2 {
            return Err(bad("folds must be at least 2"));
        }
        if raw.horizons.is_empty() {
            return Err(bad("horizons must not be empty"));
        }
        let mut horizons = raw.horizons.clone();
        horizons.sort();
        horizons.dedup();
        if !(0.0..=1.0).contains(&raw.target_fnr) {
            return Err(bad("target_fnr must lie in [0, 1]"));
        }
        let defaults = DateRange::default();
        let date_range = DateRange::new(
            raw.date_start.unwrap_or(defaults.start),
            raw.date_end.unwrap_or(defaults.end),
        );
        if date_range.start > date_range.end {
            return Err(bad("date_start is after date_end"));
        }

        let input = match (&raw.input.cohort, &raw.input.synthetic) {
            (Some(p), None) => Input::Cohort(resolve(base, p)),
            (None, Some(p)) => {
                let path = resolve(base, p);
                let config = SyntheticConfig::load(&path)
                    .map_err(|e| bad(format!("{}: {e}", path.display())))?;
                Input::Synthetic { path, config }
            }
            _ => return Err(bad("[input] needs exactly one of `cohort` or `synthetic`")),
        };

        if raw.models.is_empty() {
            return Err(bad("at least one [[model]] is required"));
        }
        let mut names = HashSet::new();
        let mut models = Vec::new();
        for m in &raw.models {
            if m.name.is_empty()
                || !m
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(bad(format!(
                    "model name {:?} must be [A-Za-z0-9_-]+",
                    m.name
                )));
            }
            if !names.insert(m.name.clone()) {
                return Err(bad(format!("duplicate model name `{}`", m.name)));
            }
            let spec = match m.kind.as_str() {
                "kdri" => {
                    if m.features.is_some()
                        || m.n_trees.is_some()
                        || m.mtry.is_some()
                        || m.min_node.is_some()
                    {
                        return Err(bad(format!(
                            "model `{}`: kdri takes only `coefficients`",
                            m.name
                        )));
                    }
                    let p = m.coefficients.as_ref().ok_or_else(|| {
                        bad(format!("model `{}`: missing `coefficients`", m.name))
                    })?;
                    let p = resolve(base, p);
                    let coeffs =
                        load_coefficients(&p).map_err(|e| bad(format!("{}: {e}", p.display())))?;
                    ModelSpec::Kdri(coeffs)
                }
                "forest" => {
                    if m.coefficients.is_some() {
                        return Err(bad(format!(
                            "model `{}`: forest takes no `coefficients`",
                            m.name
                        )));
                    }
                    let features =
                        resolve_features(m.features.as_ref().ok_or_else(|| {
                            bad(format!("model `{}`: missing `features`", m.name))
                        })?)?;
                    let d = ForestParams::default();
                    let params = ForestParams {
                        n_trees: m.n_trees.unwrap_or(d.n_trees),
                        mtry: m.mtry,
                        min_node: m.min_node.unwrap_or(d.min_node),
                        seed,
                    };
                    ModelSpec::Forest { features, params }
                }
                other => {
                    return Err(bad(format!(
                        "model `{}`: unknown kind `{other}` (kdri or forest)",
                        m.name
                    )))
                }
            };
            models.push(ModelConfig {
                name: m.name.clone(),
                spec,
            });
        }

        let sweep = SweepConfig {
            tree_counts: raw
                .sweep
                .tree_counts
                .clone()
                .unwrap_or_else(|| vec![10, 100, 1000]),
            model: raw.sweep.model.clone(),
            horizon: raw.sweep.horizon,
        };

        Ok(RunConfig {
            seed,
            folds: raw.folds,
            horizons,
            target_fnr: raw.target_fnr,
            output_dir: raw.output_dir.as_ref().map(|p| resolve(base, p)),
            filter: raw.filter,
            date_range,
            survival_population: raw.survival_population,
            save_models: raw.save_models,
            input,
            models,
            sweep,
        })
    }
}
