//! Largest Lyapunov exponent and bifurcation samples across a parameter scan: `lyapunov-scan`.

use erc_core::lyapunov::{bifurcation_scan, BifurcationScan, ScanDrive};

use super::{tables_to_artifacts, Artifact, Outcome};
use crate::config::{ExperimentConfig, InputSpec};
use crate::error::{CliError, Result};
use crate::output::{num, Stages, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovOutcome {
    pub parameter: String,
    pub scan: BifurcationScan,
}

impl LyapunovOutcome {
    /// `(value, lambda)` for each point that completed.
    pub fn exponents(&self) -> Vec<(f64, f64)> {
        self.scan
            .points
            .iter()
            .filter_map(|p| p.lambda.map(|l| (p.parameter, l)))
            .collect()
    }
}

impl Outcome for LyapunovOutcome {
    fn artifacts(&self) -> Result<Vec<Artifact>> {
        let mut summary = Table::new("lyapunov.csv", &["parameter", "value", "lambda", "error"]);
        for p in &self.scan.points {
            summary.push(vec![
                self.parameter.clone(),
                num(p.parameter),
                p.lambda.map(num).unwrap_or_default(),
                p.error.clone().unwrap_or_default(),
            ]);
        }
        let mut out = tables_to_artifacts(&[summary])?;
        let mut bytes = Vec::new();
        self.scan.write_csv(&mut bytes)?;
        out.push(Artifact {
            file: "lyapunov_scan.csv".into(),
            bytes,
        });
        Ok(out)
    }

    fn notes(&self) -> Vec<String> {
        self.scan
            .points
            .iter()
            .filter_map(|p| {
                p.error
                    .as_ref()
                    .map(|e| format!("{}={}: {e}", self.parameter, p.parameter))
            })
            .collect()
    }
}

pub fn scan_drive(cfg: &ExperimentConfig) -> Result<ScanDrive> {
    let input_range = if cfg.lyapunov.driven {
        match cfg.input() {
            InputSpec::Uniform { lo, hi } => Some((lo, hi)),
            other => {
                return Err(CliError::Config(format!(
                    "lyapunov-scan drives with a uniform input, got {other:?}"
                )))
            }
        }
    } else {
        None
    };
    Ok(ScanDrive {
        input_range,
        noise: true,
        seed: cfg.seed,
    })
}

pub fn scan(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<LyapunovOutcome> {
    let parameter = cfg.scan.parameter.clone().unwrap_or_default();
    let drive = scan_drive(cfg)?;
    let family = |v: f64| {
        cfg.with_parameter(&parameter, v)
            .and_then(|c| c.system.build())
            .map_err(|e| erc_core::ErcError::InvalidArgument(e.to_string()))
    };
    let scan = stages.time("scan", || {
        bifurcation_scan(family, &cfg.scan.values, &drive, &cfg.scan_settings())
    })?;
    Ok(LyapunovOutcome { parameter, scan })
}
