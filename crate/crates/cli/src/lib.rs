//! Pipeline behind the `graftrisk` command: load or synthesize a cohort,
//! filter it, cross-validate every configured model at every horizon and
//! write the evaluation artifacts.

mod config;
mod run;
mod summary;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{
    resolve_features, Input, ModelConfig, RunConfig, SurvivalPopulation, SweepConfig,
};
pub use run::{
    cmd_filter, cmd_synth, run_pipeline, run_sweep, FilterOutput, RunOutput, SweepOutput, SweepRow,
};
pub use summary::{
    DeLongSummary, DeltaSummary, HorizonSummary, LogRankSummary, ModelSummary, RunSummary,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: graftrisk::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Threads(String),
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T, E: Into<graftrisk::Error>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|e| CliError::Stage {
            stage: stage(),
            source: e.into(),
        })
    }
}

/// A file produced by a command, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: PathBuf,
    pub contents: Vec<u8>,
}

impl Artifact {
    pub fn new(path: impl Into<PathBuf>, contents: impl Into<Vec<u8>>) -> Self {
        Artifact {
            path: path.into(),
            contents: contents.into(),
        }
    }
}

/// Writes every artifact under `dir`. If any write fails, the files already
/// written are removed before the error is returned.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.path);
        let result = path
            .parent()
            .map_or(Ok(()), std::fs::create_dir_all)
            .and_then(|_| std::fs::write(&path, &a.contents));
        if let Err(e) = result {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(io(&path)(e));
        }
        written.push(path);
    }
    Ok(())
}

/// Runs `f` on a rayon pool of `threads` workers (`None`: rayon's default).
/// Results never depend on the worker count.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Threads("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Threads(e.to_string()))?;
    Ok(pool.install(f))
}
