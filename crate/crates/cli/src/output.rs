//! CSV tables, stage timing and the run manifest.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use erc_core::capacity::fmt_f64;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Formats a real with 17 significant digits.
pub fn num(x: f64) -> String {
    fmt_f64(x)
}

/// One CSV file: a header row and string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self {
            file: file.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(&self.file);
        std::fs::write(&path, self.to_bytes()?)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    /// Column index by header name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Reads a CSV written by [`Table::write`].
pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(Table {
        file: path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        header,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Wall-clock time per named stage, in call order.
#[derive(Debug)]
pub struct Stages {
    started: Instant,
    pub timings: Vec<StageTiming>,
}

impl Default for Stages {
    fn default() -> Self {
        Self {
            started: Instant::now(),
            timings: Vec::new(),
        }
    }
}

impl Stages {
    pub fn time<T>(&mut self, stage: impl Into<String>, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage: stage.into(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn elapsed(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }
}

/// Everything needed to rerun an experiment, plus what the run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub threads: usize,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig, threads: usize) -> Self {
        Self {
            artifact: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: config.experiment.name().to_string(),
            seed: config.seed,
            threads,
            started_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            wall_clock_seconds: 0.0,
            stages: Vec::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
            config: config.clone(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let manifest: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        manifest.config.validate()?;
        Ok(manifest)
    }
}
