//! Experiment pipelines. Each module turns a resolved config into a typed
//! outcome that renders to CSV artifacts.

pub mod capacity;
pub mod desync;
pub mod invariance;
pub mod lyapunov;
pub mod memory;
pub mod task;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use erc_core::dynamics::{binary_inputs, uniform_inputs, SystemSpec};
use erc_core::ensemble::{
    ensemble_observe, simulate_trial, DivergencePolicy, EnsembleAverages, EnsembleConfig,
    FeatureMatrix, Observable, ObserveOptions,
};

use crate::config::{ExperimentConfig, ExperimentKind, InputSpec, Variant};
use crate::error::{CliError, Result};
use crate::output::{Stages, Table};

/// ChaCha stream reserved for the drive sequence; trial streams count up from 0.
pub const INPUT_STREAM: u64 = u64::MAX;

/// Common input shared by every trial. `bits` is set for binary inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub values: Vec<f64>,
    pub bits: Option<Vec<u8>>,
}

pub fn input_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INPUT_STREAM);
    rng
}

pub fn generate_drive(spec: InputSpec, len: usize, seed: u64) -> Result<Drive> {
    let mut rng = input_rng(seed);
    Ok(match spec {
        InputSpec::Uniform { lo, hi } => Drive {
            values: uniform_inputs(len, lo, hi, &mut rng),
            bits: None,
        },
        InputSpec::Binary { lo, hi } => {
            let bits = binary_inputs(len, &mut rng);
            Drive {
                values: bits.iter().map(|&b| if b == 1 { hi } else { lo }).collect(),
                bits: Some(bits),
            }
        }
        InputSpec::Normal { mean, sd } => {
            let dist = Normal::new(mean, sd).map_err(|e| CliError::Config(e.to_string()))?;
            Drive {
                values: (0..len).map(|_| dist.sample(&mut rng)).collect(),
                bits: None,
            }
        }
        InputSpec::Constant { value } => Drive {
            values: vec![value; len],
            bits: None,
        },
    })
}

/// Features for one variant, with the ensemble statistics that produced them.
pub struct VariantFeatures {
    pub features: FeatureMatrix,
    pub averages: Option<EnsembleAverages>,
}

impl VariantFeatures {
    pub fn excluded(&self) -> usize {
        self.averages.as_ref().map_or(0, |a| a.excluded.len())
    }
}

/// Raw state components of trial 0 over the retained window.
pub fn raw_states(
    spec: &SystemSpec,
    ens: &EnsembleConfig,
    inputs: &[f64],
    washout: usize,
) -> Result<FeatureMatrix> {
    Ok(raw_trial(spec, ens, inputs, washout)?.1)
}

/// Raw states of the first trial that is not excluded, with its index.
/// Under `Abort` this is always trial 0.
pub fn raw_trial(
    spec: &SystemSpec,
    ens: &EnsembleConfig,
    inputs: &[f64],
    washout: usize,
) -> Result<(usize, FeatureMatrix)> {
    let mut trial = 0;
    let traj = loop {
        match simulate_trial(spec, ens, inputs, washout, trial) {
            Err(e)
                if e.is_divergence()
                    && ens.on_divergence == DivergencePolicy::Exclude
                    && trial + 1 < ens.trials =>
            {
                trial += 1
            }
            r => break r?,
        }
    };
    let names = (0..spec.dim())
        .map(|c| Observable::new(c, erc_core::ensemble::ObservationFn::identity()))
        .map(|o| o.label(spec.name(), false).to_string())
        .collect();
    let cols = (0..spec.dim())
        .map(|c| traj.retained_component(c))
        .collect();
    Ok((trial, FeatureMatrix::from_columns(names, cols)?))
}

/// Ensemble averages of `observables`, optionally followed by trial 0's raw states.
pub fn averaged_features(
    spec: &SystemSpec,
    ens: &EnsembleConfig,
    inputs: &[f64],
    washout: usize,
    observables: &[Observable],
    include_raw: bool,
    opts: &ObserveOptions,
) -> Result<VariantFeatures> {
    let avg = ensemble_observe(spec, ens, inputs, washout, observables, opts)?;
    let names = observables
        .iter()
        .map(|o| o.label(spec.name(), true).to_string())
        .collect();
    let mut features = FeatureMatrix::from_columns(names, avg.means.clone())?;
    if include_raw {
        let raw = raw_states(spec, ens, inputs, washout)?;
        for j in 0..raw.ncols() {
            features.push(raw.names()[j].clone(), raw.column(j))?;
        }
    }
    Ok(VariantFeatures {
        features,
        averages: Some(avg),
    })
}

/// Features of a task variant under `cfg` (whose system carries the noise level).
pub fn variant_features(
    cfg: &ExperimentConfig,
    variant: Variant,
    spec: &SystemSpec,
    inputs: &[f64],
) -> Result<VariantFeatures> {
    let washout = cfg.protocol.washout;
    let mut ens = cfg.ensemble_config();
    match variant {
        Variant::Standard | Variant::Noisy => {
            ens.trials = 1;
            ens.weights = erc_core::ensemble::Weights::Uniform;
            ens.per_trial_noise = variant == Variant::Noisy;
            Ok(VariantFeatures {
                features: raw_states(spec, &ens, inputs, washout)?,
                averages: None,
            })
        }
        Variant::Erc => averaged_features(
            spec,
            &ens,
            inputs,
            washout,
            &cfg.observables(spec.dim())?,
            cfg.observation.include_raw,
            &ObserveOptions::default(),
        ),
        Variant::ErcPowers => {
            let obs = Observable::powers(spec.dim(), cfg.task.max_power)?;
            averaged_features(
                spec,
                &ens,
                inputs,
                washout,
                &obs,
                false,
                &ObserveOptions::default(),
            )
        }
    }
}

/// A file produced by an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file: String,
    pub bytes: Vec<u8>,
}

/// Typed experiment result rendered to files.
pub trait Outcome: Send {
    fn artifacts(&self) -> Result<Vec<Artifact>>;

    /// Free-form remarks recorded in the manifest.
    fn notes(&self) -> Vec<String> {
        Vec::new()
    }
}

pub(crate) fn tables_to_artifacts(tables: &[Table]) -> Result<Vec<Artifact>> {
    tables
        .iter()
        .map(|t| {
            Ok(Artifact {
                file: t.file.clone(),
                bytes: t.to_bytes()?,
            })
        })
        .collect()
}

/// Runs the experiment named in `cfg`.
pub fn execute(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<Box<dyn Outcome>> {
    Ok(match cfg.experiment {
        ExperimentKind::McEsn | ExperimentKind::McChaotic => Box::new(memory::run(cfg, stages)?),
        ExperimentKind::FiniteSize => Box::new(memory::finite_size(cfg, stages)?),
        ExperimentKind::NarmaSweep => Box::new(task::narma_sweep(cfg, stages)?),
        ExperimentKind::TaskRun => Box::new(task::run(cfg, stages)?),
        ExperimentKind::IpcSweep => Box::new(capacity::sweep(cfg, stages)?),
        ExperimentKind::LyapunovScan => Box::new(lyapunov::scan(cfg, stages)?),
        ExperimentKind::Desync => Box::new(desync::run(cfg, stages)?),
        ExperimentKind::TimeInvariance => Box::new(invariance::run(cfg, stages)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drives_are_reproducible_and_in_range() {
        let spec = InputSpec::Uniform { lo: -1.0, hi: 1.0 };
        let a = generate_drive(spec, 500, 3).unwrap();
        assert_eq!(a, generate_drive(spec, 500, 3).unwrap());
        assert_ne!(a, generate_drive(spec, 500, 4).unwrap());
        assert!(a.values.iter().all(|v| (-1.0..=1.0).contains(v)));
        let b = generate_drive(InputSpec::Binary { lo: 0.2, hi: 0.7 }, 200, 3).unwrap();
        let bits = b.bits.unwrap();
        for (v, bit) in b.values.iter().zip(&bits) {
            assert_eq!(*v, if *bit == 1 { 0.7 } else { 0.2 });
        }
    }

    #[test]
    fn drive_stream_is_disjoint_from_trial_streams() {
        let d = generate_drive(InputSpec::Uniform { lo: 0.0, hi: 1.0 }, 8, 9).unwrap();
        let mut t0 = erc_core::ensemble::trial_rng(9, 0);
        let other = uniform_inputs(8, 0.0, 1.0, &mut t0);
        assert_ne!(d.values, other);
    }
}
