//! Information processing capacity across a parameter scan: `ipc-sweep`.

use erc_core::capacity::{ipc, tipc, CapacityReport};
use erc_core::ensemble::ObserveOptions;

use super::{averaged_features, generate_drive, tables_to_artifacts, Artifact, Outcome};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{num, Stages, Table};

/// Slack allowed when checking the total against the state rank.
pub const RANK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityPoint {
    pub value: f64,
    pub report: CapacityReport,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityOutcome {
    pub parameter: String,
    pub points: Vec<CapacityPoint>,
}

impl CapacityOutcome {
    pub fn all_within_rank_bound(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.report.within_rank_bound(RANK_TOLERANCE))
    }
}

impl Outcome for CapacityOutcome {
    fn artifacts(&self) -> Result<Vec<Artifact>> {
        let mut by_degree = Table::new(
            "capacity_report.csv",
            &["parameter", "value", "degree", "ipc", "tipc", "rank"],
        );
        let mut report = Table::new(
            "capacity_summary.csv",
            &[
                "parameter",
                "value",
                "ipc_total",
                "tipc_total",
                "total",
                "rank",
                "within_rank_bound",
                "terms",
                "excluded_trials",
            ],
        );
        let mut terms = Table::new(
            "capacity_terms.csv",
            &[
                "parameter",
                "value",
                "term",
                "degree",
                "capacity",
                "raw",
                "threshold",
            ],
        );
        for p in &self.points {
            let r = &p.report;
            let v = num(p.value);
            for d in 0..r.ipc_by_degree.len().max(r.tipc_by_degree.len()) {
                by_degree.push(vec![
                    self.parameter.clone(),
                    v.clone(),
                    d.to_string(),
                    num(r.ipc_by_degree.get(d).copied().unwrap_or(0.0)),
                    num(r.tipc_by_degree.get(d).copied().unwrap_or(0.0)),
                    r.rank.to_string(),
                ]);
            }
            report.push(vec![
                self.parameter.clone(),
                v.clone(),
                num(r.ipc_total()),
                num(r.tipc_total()),
                num(r.total),
                r.rank.to_string(),
                r.within_rank_bound(RANK_TOLERANCE).to_string(),
                r.terms.len().to_string(),
                p.excluded.to_string(),
            ]);
            for t in &r.terms {
                terms.push(vec![
                    self.parameter.clone(),
                    v.clone(),
                    t.term.to_string(),
                    t.term.total_degree().to_string(),
                    num(t.capacity),
                    num(t.raw),
                    num(t.threshold),
                ]);
            }
        }
        tables_to_artifacts(&[by_degree, report, terms])
    }

    fn notes(&self) -> Vec<String> {
        self.points
            .iter()
            .filter(|p| !p.report.within_rank_bound(RANK_TOLERANCE))
            .map(|p| {
                format!(
                    "{}={}: total capacity {} exceeds rank {}",
                    self.parameter, p.value, p.report.total, p.report.rank
                )
            })
            .collect()
    }
}

/// IPC (and TIPC when `capacity.harmonics > 0`) of the averaged features at each scan value.
pub fn sweep(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<CapacityOutcome> {
    let parameter = cfg.scan.parameter.clone().unwrap_or_default();
    let washout = cfg.protocol.washout;
    let drive = generate_drive(cfg.input(), cfg.protocol.total_len(), cfg.seed)?;
    let retained = &drive.values[washout..];
    let opts = cfg.capacity_options()?;
    let mut points = Vec::with_capacity(cfg.scan.values.len());
    for &value in &cfg.scan.values {
        let point = cfg.with_parameter(&parameter, value)?;
        let spec = point.system.build()?;
        let ens = point.ensemble_config();
        let vf = stages.time(format!("{parameter}={value} ensemble"), || {
            averaged_features(
                &spec,
                &ens,
                &drive.values,
                washout,
                &point.observables(spec.dim())?,
                point.observation.include_raw,
                &ObserveOptions::default(),
            )
        })?;
        let c = &point.capacity;
        let report = stages.time(format!("{parameter}={value} capacity"), || {
            if c.harmonics == 0 {
                ipc(&vf.features, retained, &opts)
            } else {
                let dt = spec.time_step();
                let time: Vec<f64> = (0..retained.len())
                    .map(|r| ((washout + r) as f64 * dt).rem_euclid(c.period))
                    .collect();
                tipc(&vf.features, retained, &time, c.period, c.harmonics, &opts)
            }
        })?;
        points.push(CapacityPoint {
            value,
            report,
            excluded: vf.excluded(),
        });
    }
    Ok(CapacityOutcome { parameter, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(&format!(
            "experiment = \"ipc-sweep\"\n[system]\nmodel = \"esn\"\nnodes = 8\n[protocol]\nwashout = 100\ntrain = 3000\ntest = 0\n[capacity]\nmax_degree = 2\nmax_delay = 6\nsurrogates = 20\n{extra}\n[scan]\nparameter = \"spectral_radius\"\nvalues = [0.5, 0.9]\n"
        ))
        .unwrap()
    }

    #[test]
    fn sweep_respects_rank_bound() {
        let out = sweep(&cfg(""), &mut Stages::default()).unwrap();
        assert_eq!(out.points.len(), 2);
        assert!(out.all_within_rank_bound());
        assert!(out.points.iter().all(|p| p.report.ipc_total() > 1.0));
        let files: Vec<_> = out
            .artifacts()
            .unwrap()
            .into_iter()
            .map(|a| a.file)
            .collect();
        assert_eq!(
            files,
            [
                "capacity_report.csv",
                "capacity_summary.csv",
                "capacity_terms.csv"
            ]
        );
    }

    #[test]
    fn temporal_terms_are_reported_when_requested() {
        let out = sweep(&cfg("harmonics = 1\nperiod = 10.0"), &mut Stages::default()).unwrap();
        assert!(out.all_within_rank_bound());
        assert!(out.points[0]
            .report
            .terms
            .iter()
            .any(|t| t.term.is_temporal()));
    }
}
