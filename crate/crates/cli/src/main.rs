use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use graftrisk::cohort::{DateRange, SyntheticConfig};
use graftrisk_cli::{
    cmd_filter, cmd_synth, run_pipeline, run_sweep, with_threads, write_artifacts, CliError,
    RunConfig,
};

#[derive(Parser)]
#[command(
    name = "graftrisk",
    version,
    about = "Graft-failure risk models on transplant cohorts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; changes speed only, never results.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Apply the exclusion filters to a cohort CSV.
    Filter {
        #[arg(long)]
        input: PathBuf,
        /// First transplant date kept (YYYY-MM-DD).
        #[arg(long)]
        start: Option<NaiveDate>,
        /// Last transplant date kept (YYYY-MM-DD).
        #[arg(long)]
        end: Option<NaiveDate>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic cohort from a synthetic-cohort config.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Cross-validate and compare every model in a run config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Cross-validated AUC by forest size.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated tree counts (overrides `[sweep] tree_counts`).
        #[arg(long, value_delimiter = ',')]
        trees: Option<Vec<usize>>,
        #[command(flatten)]
        common: Common,
    },
}

fn out_dir(flag: Option<PathBuf>, config: Option<&Path>) -> Result<PathBuf, CliError> {
    flag.or_else(|| config.map(Path::to_path_buf))
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output_dir".into()))
}

fn synth_config(path: &Path, seed: Option<u64>) -> Result<(SyntheticConfig, u64), CliError> {
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| bad(e.to_string()))?;
    let file_seed = match table.remove("seed") {
        Some(toml::Value::Integer(s)) if s >= 0 => Some(s as u64),
        Some(_) => return Err(bad("seed must be a non-negative integer".into())),
        None => None,
    };
    let seed = seed
        .or(file_seed)
        .ok_or_else(|| bad("a seed is required (config `seed` or --seed)".into()))?;
    let config =
        SyntheticConfig::from_toml_str(&toml::to_string(&table).map_err(|e| bad(e.to_string()))?)
            .map_err(|e| bad(e.to_string()))?;
    Ok((config, seed))
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Filter {
            input,
            start,
            end,
            common,
        } => {
            let d = DateRange::default();
            let range = DateRange::new(start.unwrap_or(d.start), end.unwrap_or(d.end));
            let out = out_dir(common.out, None)?;
            let result = with_threads(common.threads, || cmd_filter(&input, &range))??;
            write_artifacts(&out, &result.artifacts)?;
            println!("{}", result.report);
        }
        Command::Synth {
            config,
            seed,
            common,
        } => {
            let (cfg, seed) = synth_config(&config, seed)?;
            let out = out_dir(common.out, None)?;
            let (cohort, artifacts) = with_threads(common.threads, || cmd_synth(&cfg, seed))??;
            write_artifacts(&out, &artifacts)?;
            println!(
                "wrote {} records to {}",
                cohort.len(),
                out.join("cohort.csv").display()
            );
        }
        Command::Run {
            config,
            seed,
            common,
        } => {
            let cfg = RunConfig::load(&config, seed)?;
            let out = out_dir(common.out, cfg.output_dir.as_deref())?;
            let result = with_threads(common.threads, || run_pipeline(&cfg))??;
            write_artifacts(&out, &result.artifacts)?;
            print!("{}", result.summary.to_table());
        }
        Command::Sweep {
            config,
            seed,
            trees,
            common,
        } => {
            let cfg = RunConfig::load(&config, seed)?;
            let out = out_dir(common.out, cfg.output_dir.as_deref())?;
            let counts = trees.unwrap_or_else(|| cfg.sweep.tree_counts.clone());
            let result = with_threads(common.threads, || run_sweep(&cfg, &counts))??;
            write_artifacts(&out, &result.artifacts)?;
            println!("model {} at {}", result.model, result.horizon);
            print!("{}", result.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
