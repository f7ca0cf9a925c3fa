//! Noise-induced desynchronization: `desync`.
//!
//! Runs the configured ensemble twice, once without per-trial noise and once
//! as configured, and reports the synchronization index of the
//! raw states next to the memory curve of the averaged observables.

use erc_core::capacity::{memory_capacity, MemoryCurve};
use erc_core::ensemble::{FeatureMatrix, Observable, ObserveOptions};

use super::{generate_drive, tables_to_artifacts, Artifact, Outcome};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{num, Stages, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct DesyncVariant {
    pub variant: String,
    pub sync_index: f64,
    pub curve: MemoryCurve,
    pub excluded: usize,
}

impl DesyncVariant {
    /// Memory function at delay 1.
    pub fn m1(&self) -> f64 {
        self.curve.values.first().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesyncOutcome {
    pub variants: Vec<DesyncVariant>,
}

impl DesyncOutcome {
    pub fn variant(&self, name: &str) -> Option<&DesyncVariant> {
        self.variants.iter().find(|v| v.variant == name)
    }
}

impl Outcome for DesyncOutcome {
    fn artifacts(&self) -> Result<Vec<Artifact>> {
        let mut summary = Table::new(
            "desync.csv",
            &["variant", "sync_index", "mc", "m1", "excluded_trials"],
        );
        let mut curves = Table::new(
            "memory_curve.csv",
            &["variant", "tau", "m_tau", "raw_m_tau", "bias_floor"],
        );
        for v in &self.variants {
            summary.push(vec![
                v.variant.clone(),
                num(v.sync_index),
                num(v.curve.mc),
                num(v.m1()),
                v.excluded.to_string(),
            ]);
            for i in 0..v.curve.taus.len() {
                curves.push(vec![
                    v.variant.clone(),
                    v.curve.taus[i].to_string(),
                    num(v.curve.values[i]),
                    num(v.curve.raw_values[i]),
                    num(v.curve.bias_floor[i]),
                ]);
            }
        }
        tables_to_artifacts(&[summary, curves])
    }
}

fn noise_free(cfg: &ExperimentConfig) -> Result<ExperimentConfig> {
    if !cfg.system.build()?.uses_noise() {
        return Err(CliError::Config(
            "desync needs a system with a nonzero noise amplitude".into(),
        ));
    }
    let mut quiet = cfg.clone();
    quiet.ensemble.per_trial_noise = false;
    Ok(quiet)
}

fn variant(
    cfg: &ExperimentConfig,
    name: &str,
    inputs: &[f64],
    stages: &mut Stages,
) -> Result<DesyncVariant> {
    let spec = cfg.system.build()?;
    let washout = cfg.protocol.washout;
    let mut observables = cfg.observables(spec.dim())?;
    let nf = observables.len();
    observables.extend(Observable::all_identity(spec.dim()));
    let ens = cfg.ensemble_config();
    let opts = ObserveOptions {
        keep_trials: Vec::new(),
        second_moments: true,
    };
    let avg = stages.time(format!("{name} ensemble"), || {
        erc_core::ensemble::ensemble_observe(&spec, &ens, inputs, washout, &observables, &opts)
    })?;
    let sync_index = avg.synchronization_index(&(nf..observables.len()).collect::<Vec<_>>())?;
    let names = observables[..nf]
        .iter()
        .map(|o| o.label(spec.name(), true).to_string())
        .collect();
    let features = FeatureMatrix::from_columns(names, avg.means[..nf].to_vec())?;
    let curve = stages.time(format!("{name} memory"), || {
        memory_capacity(&features, &inputs[washout..], &cfg.memory_options())
    })?;
    Ok(DesyncVariant {
        variant: name.into(),
        sync_index,
        curve,
        excluded: avg.excluded.len(),
    })
}

pub fn run(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<DesyncOutcome> {
    let drive = generate_drive(cfg.input(), cfg.protocol.total_len(), cfg.seed)?;
    let quiet = noise_free(cfg)?;
    Ok(DesyncOutcome {
        variants: vec![
            variant(&quiet, "noise_free", &drive.values, stages)?,
            variant(cfg, "noisy", &drive.values, stages)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_free_esn_stays_synchronized() {
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"desync\"\n[system]\nmodel = \"esn\"\nnodes = 10\nnoise_gain = 0.5\n[ensemble]\ntrials = 8\n[protocol]\nwashout = 200\ntrain = 1000\ntest = 1000\n[memory]\ntau_max = 5\nsurrogates = 10\n",
        )
        .unwrap();
        let out = run(&cfg, &mut Stages::default()).unwrap();
        let quiet = out.variant("noise_free").unwrap();
        let noisy = out.variant("noisy").unwrap();
        assert!(quiet.sync_index > 0.99, "{}", quiet.sync_index);
        assert!(noisy.sync_index < quiet.sync_index);
        assert_eq!(out.artifacts().unwrap().len(), 2);
    }

    #[test]
    fn models_without_noise_are_rejected() {
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"desync\"\n[system]\nmodel = \"copy_map\"\n",
        )
        .unwrap();
        assert!(matches!(noise_free(&cfg), Err(CliError::Config(_))));
    }
}
