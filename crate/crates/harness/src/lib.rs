//! Experiment runner for the `logkant` operators: reads a configuration,
//! runs the requested checks on a worker pool and writes the report as
//! JSON, CSV or SVG plots.

pub mod checks;
pub mod config;
pub mod json;
pub mod report;
pub mod svg;

pub use config::{CheckId, ConfigError, ExperimentConfig, Format};
pub use report::{ExperimentReport, Metadata, Record, Verdict};

use anyhow::Context;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0:#}")]
    Internal(#[from] anyhow::Error),
}

impl HarnessError {
    /// 2 for configuration errors, 3 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Internal(_) => 3,
        }
    }
}

/// Runs every requested check. Failing checks are recorded and the run
/// carries on; only an invalid configuration stops it early.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let ctx = checks::Ctx::new(config)?;
    let tasks = checks::plan(config);
    let per_task = logkant::exec::map(config.execution, &tasks, |t| checks::run_task(&ctx, *t));
    Ok(ExperimentReport {
        metadata: Metadata {
            config_hash: config.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        },
        config: config.clone(),
        records: per_task.into_iter().flatten().collect(),
    })
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(())
}

/// Writes `report.json`, `report.csv` and one `<check>.svg` per check into
/// `dir`, as selected by `formats`. Returns the paths written.
pub fn emit(report: &ExperimentReport, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            Format::Json => write(dir.join("report.json"), &report.to_json(), &mut written)?,
            Format::Csv => write(dir.join("report.csv"), &report.to_csv(), &mut written)?,
            Format::Svg => {
                let mut checks: Vec<CheckId> = Vec::new();
                for r in &report.records {
                    if !checks.contains(&r.check) {
                        checks.push(r.check);
                    }
                }
                for c in checks {
                    let path = dir.join(format!("{}.svg", c.name()));
                    write(path, &svg::render(&report.records, c), &mut written)?;
                }
            }
        }
    }
    Ok(written)
}
