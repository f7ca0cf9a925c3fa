//! Memory capacity of averaged (and raw) states: `mc-esn`, `mc-chaotic`, `finite-size`.

use erc_core::capacity::{memory_capacity, MemoryCurve};
use erc_core::ensemble::ObserveOptions;

use super::{averaged_features, generate_drive, raw_trial, tables_to_artifacts, Artifact, Outcome};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::output::{num, Stages, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct VariantCurve {
    pub variant: String,
    pub trials: usize,
    pub excluded: Vec<usize>,
    pub clamps: usize,
    pub curve: MemoryCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryOutcome {
    pub curves: Vec<VariantCurve>,
}

impl MemoryOutcome {
    pub fn mc(&self, variant: &str) -> Option<f64> {
        self.curves
            .iter()
            .find(|c| c.variant == variant)
            .map(|c| c.curve.mc)
    }
}

fn curve_table(curves: &[VariantCurve]) -> Table {
    let mut t = Table::new(
        "memory_curve.csv",
        &[
            "variant",
            "trials",
            "tau",
            "m_tau",
            "raw_m_tau",
            "bias_floor",
        ],
    );
    for c in curves {
        for i in 0..c.curve.taus.len() {
            t.push(vec![
                c.variant.clone(),
                c.trials.to_string(),
                c.curve.taus[i].to_string(),
                num(c.curve.values[i]),
                num(c.curve.raw_values[i]),
                num(c.curve.bias_floor[i]),
            ]);
        }
    }
    t
}

fn summary_table(file: &str, curves: &[VariantCurve]) -> Table {
    let mut t = Table::new(
        file,
        &["variant", "trials", "mc", "excluded_trials", "log_clamps"],
    );
    for c in curves {
        t.push(vec![
            c.variant.clone(),
            c.trials.to_string(),
            num(c.curve.mc),
            c.excluded.len().to_string(),
            c.clamps.to_string(),
        ]);
    }
    t
}

fn excluded_notes(curves: &[VariantCurve]) -> Vec<String> {
    curves
        .iter()
        .filter(|c| !c.excluded.is_empty())
        .map(|c| {
            format!(
                "{} (L={}): excluded diverged trials {:?}",
                c.variant, c.trials, c.excluded
            )
        })
        .collect()
}

impl Outcome for MemoryOutcome {
    fn artifacts(&self) -> Result<Vec<Artifact>> {
        tables_to_artifacts(&[
            curve_table(&self.curves),
            summary_table("summary.csv", &self.curves),
        ])
    }

    fn notes(&self) -> Vec<String> {
        excluded_notes(&self.curves)
    }
}

/// Memory curve of the averaged features; `mc-chaotic` adds the raw single-trial baseline.
pub fn run(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<MemoryOutcome> {
    let spec = cfg.system.build()?;
    let washout = cfg.protocol.washout;
    let drive = generate_drive(cfg.input(), cfg.protocol.total_len(), cfg.seed)?;
    let retained = &drive.values[washout..];
    let opts = cfg.memory_options();
    let ens = cfg.ensemble_config();
    let observables = cfg.observables(spec.dim())?;

    let vf = stages.time("ensemble", || {
        averaged_features(
            &spec,
            &ens,
            &drive.values,
            washout,
            &observables,
            cfg.observation.include_raw,
            &ObserveOptions::default(),
        )
    })?;
    let avg = vf.averages.as_ref().expect("averaged variant");
    let curve = stages.time("memory erc", || {
        memory_capacity(&vf.features, retained, &opts)
    })?;
    let mut curves = vec![VariantCurve {
        variant: "erc".into(),
        trials: ens.trials,
        excluded: avg.excluded.clone(),
        clamps: avg.clamps,
        curve,
    }];
    if cfg.experiment == ExperimentKind::McChaotic {
        let (first, raw) = stages.time("raw trial", || {
            raw_trial(&spec, &ens, &drive.values, washout)
        })?;
        let curve = stages.time("memory raw", || memory_capacity(&raw, retained, &opts))?;
        curves.push(VariantCurve {
            variant: "raw".into(),
            trials: 1,
            excluded: (0..first).collect(),
            clamps: 0,
            curve,
        });
    }
    Ok(MemoryOutcome { curves })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSizeOutcome {
    pub points: Vec<VariantCurve>,
}

impl FiniteSizeOutcome {
    /// `(L, MC)` in scan order.
    pub fn mc_by_trials(&self) -> Vec<(usize, f64)> {
        self.points.iter().map(|p| (p.trials, p.curve.mc)).collect()
    }
}

impl Outcome for FiniteSizeOutcome {
    fn artifacts(&self) -> Result<Vec<Artifact>> {
        tables_to_artifacts(&[
            curve_table(&self.points),
            summary_table("mc_vs_L.csv", &self.points),
        ])
    }

    fn notes(&self) -> Vec<String> {
        excluded_notes(&self.points)
    }
}

/// MC of the averaged features for each ensemble size in the scan.
pub fn finite_size(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<FiniteSizeOutcome> {
    let spec = cfg.system.build()?;
    let washout = cfg.protocol.washout;
    let drive = generate_drive(cfg.input(), cfg.protocol.total_len(), cfg.seed)?;
    let retained = &drive.values[washout..];
    let opts = cfg.memory_options();
    let observables = cfg.observables(spec.dim())?;
    let mut points = Vec::new();
    for &l in &cfg.scan.values {
        let point = cfg.with_parameter("trials", l)?;
        let ens = point.ensemble_config();
        let vf = stages.time(format!("ensemble L={}", ens.trials), || {
            averaged_features(
                &spec,
                &ens,
                &drive.values,
                washout,
                &observables,
                cfg.observation.include_raw,
                &ObserveOptions::default(),
            )
        })?;
        let avg = vf.averages.as_ref().expect("averaged variant");
        let curve = stages.time(format!("memory L={}", ens.trials), || {
            memory_capacity(&vf.features, retained, &opts)
        })?;
        points.push(VariantCurve {
            variant: "erc".into(),
            trials: ens.trials,
            excluded: avg.excluded.clone(),
            clamps: avg.clamps,
            curve,
        });
    }
    Ok(FiniteSizeOutcome { points })
}
