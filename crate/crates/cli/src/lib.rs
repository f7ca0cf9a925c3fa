//! Experiment runner for ensemble reservoir computing: TOML configs in,
//! CSV tables, SVG charts and a reproducibility manifest out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod oracle;
pub mod output;
pub mod plot;

use std::path::{Path, PathBuf};

use config::ExperimentConfig;
use error::{CliError, Result};
use output::{RunManifest, Stages};

/// Environment variable overriding the configured worker-thread count.
pub const THREADS_ENV: &str = "ERC_THREADS";

/// Loads a TOML config, or the config recorded in a run manifest (`.json`).
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    if path.extension().is_some_and(|e| e == "json") {
        Ok(RunManifest::read(path)?.config)
    } else {
        ExperimentConfig::from_path(path)
    }
}

/// Thread budget: `ERC_THREADS` if set, else the config value; 0 means every core.
pub fn thread_budget(configured: usize) -> Result<usize> {
    let requested = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            CliError::Config(format!(
                "{THREADS_ENV} must be a non-negative integer, got `{v}`"
            ))
        })?,
        Err(_) => configured,
    };
    Ok(match requested {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    })
}

/// Runs `cfg` on a pool of `threads` workers and writes its outputs and manifest into `dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, threads: usize) -> Result<RunManifest> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    let mut manifest = RunManifest::new(cfg, threads);
    let mut stages = Stages::default();
    let outcome = pool.install(|| experiments::execute(cfg, &mut stages))?;
    let artifacts = outcome.artifacts()?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for a in &artifacts {
        let path = dir.join(&a.file);
        std::fs::write(&path, &a.bytes)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        manifest.outputs.push(a.file.clone());
    }
    manifest.notes = outcome.notes();
    manifest.stages = stages.timings.clone();
    manifest.wall_clock_seconds = stages.elapsed();
    manifest.write(dir)?;
    Ok(manifest)
}

/// Output directory: the override if given, else the configured one.
pub fn output_dir(cfg: &ExperimentConfig, overridden: Option<PathBuf>) -> PathBuf {
    overridden.unwrap_or_else(|| cfg.output_dir.clone())
}
