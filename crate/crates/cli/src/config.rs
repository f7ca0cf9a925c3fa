//! Experiment configuration: TOML in, fully resolved config out.
//!
//! Every optional key has a default; [`ExperimentConfig::resolve`] fills the
//! ones that depend on other keys so the manifest records the exact values used.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use erc_core::capacity::{CapacityOptions, Evaluation, InputDistribution, MemoryOptions};
use erc_core::dynamics::{
    ChuaForm, CopyMapSpec, EsnSpec, LorenzForm, OdeKind, OdeSpec, SystemSpec,
};
use erc_core::ensemble::{
    DivergencePolicy, EnsembleConfig, Normalization, Observable, ObservationFn, ObservationKind,
    Weights,
};
use erc_core::lyapunov::{LyapunovConfig, ScanSettings};
use erc_core::readout::DEFAULT_RIDGE;
use erc_core::tasks::{HammingDecoder, NARMA_DEFAULT_DELTA};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    McEsn,
    McChaotic,
    NarmaSweep,
    IpcSweep,
    TaskRun,
    LyapunovScan,
    FiniteSize,
    Desync,
    TimeInvariance,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::McEsn => "mc-esn",
            ExperimentKind::McChaotic => "mc-chaotic",
            ExperimentKind::NarmaSweep => "narma-sweep",
            ExperimentKind::IpcSweep => "ipc-sweep",
            ExperimentKind::TaskRun => "task-run",
            ExperimentKind::LyapunovScan => "lyapunov-scan",
            ExperimentKind::FiniteSize => "finite-size",
            ExperimentKind::Desync => "desync",
            ExperimentKind::TimeInvariance => "time-invariance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Master seed for inputs, initial conditions and noise.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub threads: usize,
    pub system: SystemConfig,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub observation: ObservationSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub memory: MemorySection,
    #[serde(default)]
    pub capacity: CapacitySection,
    #[serde(default)]
    pub task: TaskSection,
    #[serde(default)]
    pub lyapunov: LyapunovSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub invariance: InvarianceSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_seed() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.resolve()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Fills defaults that depend on the system or experiment and validates the result.
    pub fn resolve(mut self) -> Result<Self> {
        if self.protocol.input.is_none() {
            self.protocol.input = Some(self.system.default_input());
        }
        if self.scan.values.is_empty() {
            if let Some(r) = self.scan.range {
                self.scan.values = r.values()?;
                self.scan.range = None;
            }
        }
        if self.observation.functions.is_empty() {
            self.observation.functions = match self.observation.max_power {
                Some(n) => (1..=n)
                    .map(|k| ObservationSpec::plain(ObservationKind::Power { n: k }))
                    .collect(),
                None => vec![self.system.default_observation()],
            };
        }
        self.observation.max_power = None;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.system.build()?;
        self.ensemble.validate()?;
        let p = &self.protocol;
        if p.train == 0 {
            return Err(CliError::Config("protocol.train must be >= 1".into()));
        }
        if matches!(
            self.experiment,
            ExperimentKind::NarmaSweep | ExperimentKind::TaskRun
        ) && p.test == 0
        {
            return Err(CliError::Config(
                "protocol.test must be >= 1 for task experiments".into(),
            ));
        }
        for c in self.observation.component_list(spec.dim()) {
            if c >= spec.dim() {
                return Err(CliError::Config(format!(
                    "observation component {c} out of range for dimension {}",
                    spec.dim()
                )));
            }
        }
        for f in &self.observation.functions {
            f.build()?;
        }
        if let Some(InputSpec::Uniform { lo, hi }) = p.input {
            if !(lo < hi) {
                return Err(CliError::Config(format!(
                    "input range [{lo}, {hi}] is empty"
                )));
            }
        }
        if let Some(InputSpec::Normal { sd, .. }) = p.input {
            if !(sd > 0.0) {
                return Err(CliError::Config("input sd must be > 0".into()));
            }
        }
        if self.memory.tau_max == 0 {
            return Err(CliError::Config("memory.tau_max must be >= 1".into()));
        }
        let needs_grid = matches!(
            self.experiment,
            ExperimentKind::NarmaSweep
                | ExperimentKind::IpcSweep
                | ExperimentKind::LyapunovScan
                | ExperimentKind::FiniteSize
        );
        if needs_grid && (self.scan.parameter.is_none() || self.scan.values.is_empty()) {
            return Err(CliError::Config(format!(
                "{} needs scan.parameter and scan.values (or scan.range)",
                self.experiment.name()
            )));
        }
        if let Some(name) = &self.scan.parameter {
            for &v in &self.scan.values {
                self.with_parameter(name, v)?;
            }
        }
        if self.experiment == ExperimentKind::TimeInvariance && self.invariance.block < 2 {
            return Err(CliError::Config("invariance.block must be >= 2".into()));
        }
        if self.experiment == ExperimentKind::FiniteSize
            && self.scan.parameter.as_deref() != Some("trials")
        {
            return Err(CliError::Config(
                "finite-size scans the `trials` parameter".into(),
            ));
        }
        Ok(())
    }

    /// Copy with one scanned parameter replaced. `trials` sets the ensemble
    /// size; any other name must be a numeric field of the system.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        if name == "trials" {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(CliError::Config(format!(
                    "trials must be a positive integer, got {value}"
                )));
            }
            cfg.ensemble.trials = value as usize;
        } else {
            cfg.system = self.system.with_parameter(name, value)?;
        }
        Ok(cfg)
    }

    pub fn input(&self) -> InputSpec {
        self.protocol
            .input
            .unwrap_or_else(|| self.system.default_input())
    }

    pub fn observables(&self, dim: usize) -> Result<Vec<Observable>> {
        self.observation.observables(dim)
    }

    pub fn memory_options(&self) -> MemoryOptions {
        MemoryOptions {
            tau_max: self.memory.tau_max,
            surrogates: self.memory.surrogates,
            ridge: self.memory.ridge,
            evaluation: match self.memory.train_fraction {
                Some(f) => Evaluation::Holdout { train_fraction: f },
                None => Evaluation::InSample,
            },
        }
    }

    pub fn capacity_options(&self) -> Result<CapacityOptions> {
        let c = &self.capacity;
        let distribution = match self.input() {
            InputSpec::Uniform { lo, hi } => InputDistribution::Uniform { lo, hi },
            InputSpec::Binary { .. } => InputDistribution::Binary,
            InputSpec::Normal { .. } => InputDistribution::Normal,
            InputSpec::Constant { .. } => {
                return Err(CliError::Config("capacity needs a random input".into()))
            }
        };
        Ok(CapacityOptions {
            max_degree: c.max_degree,
            max_delay: c.max_delay,
            max_delay_by_degree: c.max_delay_by_degree.clone(),
            term_budget: c.term_budget,
            surrogates: c.surrogates,
            orthonormalize_targets: c.orthonormalize_targets,
            distribution,
        })
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        EnsembleConfig {
            trials: self.ensemble.trials,
            weights: self.ensemble.weights.clone(),
            master_seed: self.seed,
            per_trial_noise: self.ensemble.per_trial_noise,
            on_divergence: self.ensemble.on_divergence,
            escape_bound: self.ensemble.escape_bound,
        }
    }

    pub fn lyapunov_config(&self) -> LyapunovConfig {
        let l = &self.lyapunov;
        LyapunovConfig {
            total_steps: l.total_steps,
            renorm_interval: l.renorm_interval,
            epsilon0: l.epsilon0,
            transient: l.transient,
            seed: self.seed,
        }
    }

    pub fn scan_settings(&self) -> ScanSettings {
        ScanSettings {
            washout: self.protocol.washout,
            samples: self.lyapunov.samples,
            stride: self.lyapunov.stride,
            lyapunov: self.lyapunov_config(),
        }
    }
}

/// Reservoir model and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SystemConfig {
    Esn(EsnConfig),
    Lorenz(LorenzConfig),
    Rossler(RosslerConfig),
    Chua(ChuaConfig),
    CopyMap(CopyMapConfig),
    StuartLandauRadial(StuartLandauRadialConfig),
    StuartLandauX(StuartLandauXConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsnConfig {
    pub nodes: usize,
    pub spectral_radius: f64,
    pub input_gain: f64,
    pub noise_gain: f64,
    /// Seeds `W` and `W_in`; the same seed gives the same raw matrix at every radius.
    pub weight_seed: u64,
}

impl Default for EsnConfig {
    fn default() -> Self {
        Self {
            nodes: 30,
            spectral_radius: 0.94,
            input_gain: 0.01,
            noise_gain: 0.0,
            weight_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorenzConfig {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub iota: f64,
    pub dt: f64,
    pub form: LorenzForm,
}

impl Default for LorenzConfig {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            iota: 30.0,
            dt: 0.01,
            form: LorenzForm::Conventional,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RosslerConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub iota: f64,
    pub dt: f64,
}

impl Default for RosslerConfig {
    fn default() -> Self {
        Self {
            a: 0.2,
            b: 0.2,
            c: 5.7,
            iota: 0.2,
            dt: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChuaConfig {
    pub a: f64,
    pub b: f64,
    pub m0: f64,
    pub m1: f64,
    pub iota: f64,
    pub dt: f64,
    pub form: ChuaForm,
}

impl Default for ChuaConfig {
    fn default() -> Self {
        Self {
            a: 15.6,
            b: 28.0,
            m0: -1.143,
            m1: -0.714,
            iota: 2.0,
            dt: 0.05,
            form: ChuaForm::Conventional,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CopyMapConfig {
    pub lambda: f64,
    pub omega: f64,
    pub iota: f64,
}

impl Default for CopyMapConfig {
    fn default() -> Self {
        let d = CopyMapSpec::default();
        Self {
            lambda: d.lambda,
            omega: d.omega,
            iota: d.iota,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StuartLandauRadialConfig {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub dt: f64,
}

impl Default for StuartLandauRadialConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            sigma: 0.5,
            dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StuartLandauXConfig {
    pub alpha: f64,
    pub beta: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub dt: f64,
}

impl Default for StuartLandauXConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            sigma1: 0.8,
            sigma2: 0.1,
            dt: 0.01,
        }
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<SystemSpec> {
        let ode = |kind: OdeKind, dt: f64| -> Result<SystemSpec> {
            Ok(SystemSpec::Ode(OdeSpec::new(kind, dt)?))
        };
        let spec = match self {
            SystemConfig::Esn(e) => {
                if e.nodes == 0 {
                    return Err(CliError::Config("esn.nodes must be >= 1".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(e.weight_seed);
                SystemSpec::Esn(EsnSpec::random(
                    e.nodes,
                    e.spectral_radius,
                    e.input_gain,
                    e.noise_gain,
                    &mut rng,
                )?)
            }
            SystemConfig::Lorenz(c) => ode(
                OdeKind::Lorenz {
                    sigma: c.sigma,
                    rho: c.rho,
                    beta: c.beta,
                    iota: c.iota,
                    form: c.form,
                },
                c.dt,
            )?,
            SystemConfig::Rossler(c) => ode(
                OdeKind::Rossler {
                    a: c.a,
                    b: c.b,
                    c: c.c,
                    iota: c.iota,
                },
                c.dt,
            )?,
            SystemConfig::Chua(c) => ode(
                OdeKind::Chua {
                    a: c.a,
                    b: c.b,
                    m0: c.m0,
                    m1: c.m1,
                    iota: c.iota,
                    form: c.form,
                },
                c.dt,
            )?,
            SystemConfig::CopyMap(c) => SystemSpec::CopyMap(CopyMapSpec {
                lambda: c.lambda,
                omega: c.omega,
                iota: c.iota,
            }),
            SystemConfig::StuartLandauRadial(c) => ode(
                OdeKind::StuartLandauRadial {
                    alpha: c.alpha,
                    beta: c.beta,
                    sigma: c.sigma,
                },
                c.dt,
            )?,
            SystemConfig::StuartLandauX(c) => ode(
                OdeKind::StuartLandauXInput {
                    alpha: c.alpha,
                    beta: c.beta,
                    sigma1: c.sigma1,
                    sigma2: c.sigma2,
                },
                c.dt,
            )?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Input distribution used when the config does not name one.
    pub fn default_input(&self) -> InputSpec {
        match self {
            SystemConfig::Lorenz(_) | SystemConfig::Rossler(_) | SystemConfig::Chua(_) => {
                InputSpec::Uniform { lo: -1.0, hi: 1.0 }
            }
            SystemConfig::StuartLandauX(_) => InputSpec::Normal { mean: 0.0, sd: 1.0 },
            SystemConfig::StuartLandauRadial(_) => InputSpec::Constant { value: 1.0 },
            SystemConfig::Esn(_) | SystemConfig::CopyMap(_) => {
                InputSpec::Uniform { lo: 0.0, hi: 1.0 }
            }
        }
    }

    /// Observation function used when the config does not name one.
    pub fn default_observation(&self) -> ObservationSpec {
        let kind = match self {
            SystemConfig::Rossler(_) => ObservationKind::LogSq,
            SystemConfig::CopyMap(_) => ObservationKind::ExpSq,
            _ => ObservationKind::Identity,
        };
        ObservationSpec::plain(kind)
    }

    /// Copy with the numeric field `name` set to `value`.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        let mut json = serde_json::to_value(self).map_err(|e| CliError::Config(e.to_string()))?;
        let obj = json
            .as_object_mut()
            .ok_or_else(|| CliError::Config("system is not a table".into()))?;
        let slot = obj
            .get_mut(name)
            .filter(|_| name != "model")
            .ok_or_else(|| CliError::Config(format!("unknown system parameter `{name}`")))?;
        *slot = if slot.is_u64() {
            if !(value >= 0.0 && value.fract() == 0.0) {
                return Err(CliError::Config(format!(
                    "`{name}` must be a non-negative integer"
                )));
            }
            serde_json::Value::from(value as u64)
        } else if slot.is_f64() {
            serde_json::Value::from(value)
        } else {
            return Err(CliError::Config(format!(
                "system parameter `{name}` is not numeric"
            )));
        };
        serde_json::from_value(json).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub trials: usize,
    pub weights: Weights,
    /// Draw an independent noise sequence for every trial.
    pub per_trial_noise: bool,
    pub on_divergence: DivergencePolicy,
    /// State magnitude beyond which a trial counts as diverged.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_bound: Option<f64>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            trials: 1,
            weights: Weights::Uniform,
            per_trial_noise: true,
            on_divergence: DivergencePolicy::Abort,
            escape_bound: None,
        }
    }
}

impl EnsembleSection {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CliError::Config("ensemble.trials must be >= 1".into()));
        }
        if let Weights::Explicit(w) = &self.weights {
            if w.len() != self.trials {
                return Err(CliError::Config(format!(
                    "ensemble.weights has {} entries for {} trials",
                    w.len(),
                    self.trials
                )));
            }
        }
        if self
            .escape_bound
            .is_some_and(|b| !(b.is_finite() && b > 0.0))
        {
            return Err(CliError::Config(
                "ensemble.escape_bound must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One observation function, written inline as `{ fn = "power", n = 2 }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationSpec {
    #[serde(flatten)]
    pub kind: ObservationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
}

impl ObservationSpec {
    pub fn plain(kind: ObservationKind) -> Self {
        Self {
            kind,
            normalization: None,
        }
    }

    pub fn build(&self) -> Result<ObservationFn> {
        Ok(match self.normalization {
            Some(n) => ObservationFn::with_normalization(self.kind, n)?,
            None => ObservationFn::new(self.kind)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationSection {
    /// State components to observe; empty means all.
    pub components: Vec<usize>,
    pub functions: Vec<ObservationSpec>,
    /// Shorthand for `functions = x, x^2, ..., x^n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_power: Option<u32>,
    /// Append the raw states of trial 0 to the averaged features.
    pub include_raw: bool,
}

impl ObservationSection {
    pub fn component_list(&self, dim: usize) -> Vec<usize> {
        if self.components.is_empty() {
            (0..dim).collect()
        } else {
            self.components.clone()
        }
    }

    /// Observables grouped by function, components inner.
    pub fn observables(&self, dim: usize) -> Result<Vec<Observable>> {
        let comps = self.component_list(dim);
        let mut out = Vec::new();
        for f in &self.functions {
            let phi = f.build()?;
            out.extend(comps.iter().map(|&c| Observable::new(c, phi)));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Random bits mapped to the levels `lo` (0) and `hi` (1).
    Binary {
        lo: f64,
        hi: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    Constant {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub washout: usize,
    pub train: usize,
    pub test: usize,
    pub input: Option<InputSpec>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            washout: 1000,
            train: 10_000,
            test: 10_000,
            input: None,
        }
    }
}

impl ProtocolSection {
    pub fn total_len(&self) -> usize {
        self.washout + self.train + self.test
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemorySection {
    pub tau_max: usize,
    pub surrogates: usize,
    pub ridge: f64,
    /// Fraction of rows used for fitting; `None` scores in-sample.
    pub train_fraction: Option<f64>,
}

impl Default for MemorySection {
    fn default() -> Self {
        Self {
            tau_max: 40,
            surrogates: 100,
            ridge: DEFAULT_RIDGE,
            train_fraction: Some(0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacitySection {
    pub max_degree: u32,
    pub max_delay: usize,
    pub max_delay_by_degree: Vec<usize>,
    pub term_budget: usize,
    pub surrogates: usize,
    pub orthonormalize_targets: bool,
    /// Temporal harmonics for TIPC; 0 computes plain IPC.
    pub harmonics: u32,
    /// Period of the time coordinate in model time units.
    pub period: f64,
}

impl Default for CapacitySection {
    fn default() -> Self {
        let d = CapacityOptions::default();
        Self {
            max_degree: d.max_degree,
            max_delay: d.max_delay,
            max_delay_by_degree: d.max_delay_by_degree,
            term_budget: d.term_budget,
            surrogates: d.surrogates,
            orthonormalize_targets: d.orthonormalize_targets,
            harmonics: 0,
            period: std::f64::consts::TAU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Narma10,
    Crc,
    HammingEncode,
    HammingDecode,
}

/// A reservoir configuration compared in task experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// One noise-free trial, raw states.
    Standard,
    /// One noisy trial, raw states.
    Noisy,
    /// Noisy ensemble averaged with the configured observation functions.
    Erc,
    /// Noisy ensemble averaged with powers `1..=task.max_power`.
    ErcPowers,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Noisy => "noisy",
            Variant::Erc => "erc",
            Variant::ErcPowers => "erc_powers",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSection {
    pub kind: TaskKind,
    pub delta: f64,
    pub mu: f64,
    pub decoder: HammingDecoder,
    pub threshold: f64,
    pub ridge: f64,
    pub variants: Vec<Variant>,
    pub max_power: u32,
}

impl Default for TaskSection {
    fn default() -> Self {
        Self {
            kind: TaskKind::Narma10,
            delta: NARMA_DEFAULT_DELTA,
            mu: 0.0,
            decoder: HammingDecoder::Syndrome,
            threshold: 0.5,
            ridge: DEFAULT_RIDGE,
            variants: vec![
                Variant::Standard,
                Variant::Noisy,
                Variant::Erc,
                Variant::ErcPowers,
            ],
            max_power: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovSection {
    pub total_steps: usize,
    pub renorm_interval: Option<usize>,
    pub epsilon0: f64,
    pub transient: usize,
    /// Bifurcation samples per scan point.
    pub samples: usize,
    pub stride: usize,
    /// Drive the scan with the protocol input; `false` runs the autonomous system.
    pub driven: bool,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        let d = LyapunovConfig::default();
        Self {
            total_steps: d.total_steps,
            renorm_interval: d.renorm_interval,
            epsilon0: d.epsilon0,
            transient: d.transient,
            samples: 200,
            stride: 1,
            driven: true,
        }
    }
}

/// Layout of the repeated input block used by `time-invariance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvarianceSection {
    /// Length of the repeated block; the second half of each copy is compared.
    pub block: usize,
    /// Fresh random input between the washout and the first copy and between copies.
    pub gap: usize,
}

impl Default for InvarianceSection {
    fn default() -> Self {
        Self {
            block: 1000,
            gap: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl RangeSpec {
    /// `steps` evenly spaced values from `start` to `stop` inclusive.
    pub fn values(&self) -> Result<Vec<f64>> {
        match self.steps {
            0 => Err(CliError::Config("scan.range.steps must be >= 1".into())),
            1 => Ok(vec![self.start]),
            n => Ok((0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<RangeSpec>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "mc-esn"
[system]
model = "esn"
"#;

    #[test]
    fn minimal_config_resolves_defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.ensemble.trials, 1);
        assert_eq!(
            cfg.protocol.input,
            Some(InputSpec::Uniform { lo: 0.0, hi: 1.0 })
        );
        assert_eq!(cfg.observation.functions.len(), 1);
        let SystemConfig::Esn(e) = &cfg.system else {
            panic!()
        };
        assert_eq!((e.nodes, e.spectral_radius), (30, 0.94));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{MINIMAL}spectral_raduis = 0.5\n");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&bad),
            Err(CliError::Config(_))
        ));
        let bad = "experiment = \"mc-esn\"\ncolour = 1\n[system]\nmodel = \"esn\"\n";
        assert!(ExperimentConfig::from_toml_str(bad).is_err());
    }

    #[test]
    fn negative_trials_are_a_config_error() {
        let bad = format!("{MINIMAL}[ensemble]\ntrials = -5\n");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&bad),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn scan_parameters_replace_system_fields() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let c = cfg.with_parameter("spectral_radius", 1.5).unwrap();
        let SystemConfig::Esn(e) = &c.system else {
            panic!()
        };
        assert_eq!(e.spectral_radius, 1.5);
        assert_eq!(
            cfg.with_parameter("trials", 100.0).unwrap().ensemble.trials,
            100
        );
        assert!(cfg.with_parameter("nodes", 2.5).is_err());
        assert!(cfg.with_parameter("model", 1.0).is_err());
        assert!(cfg.with_parameter("gain", 1.0).is_err());
    }

    #[test]
    fn observation_functions_parse_inline() {
        let text = format!(
            "{MINIMAL}[observation]\ncomponents = [0, 2]\nfunctions = [{{ fn = \"power\", n = 2 }}, {{ fn = \"cos\", k = 1.0, normalization = \"none\" }}]\n"
        );
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let obs = cfg.observables(30).unwrap();
        assert_eq!(obs.len(), 4);
        assert_eq!(obs[1].component, 2);
        assert_eq!(obs[2].phi.normalization, Normalization::None);
    }

    #[test]
    fn max_power_expands() {
        let text = format!("{MINIMAL}[observation]\nmax_power = 3\n");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.observation.functions.len(), 3);
        assert_eq!(cfg.observation.max_power, None);
    }

    #[test]
    fn range_expands_inclusive() {
        let r = RangeSpec {
            start: 0.0,
            stop: 2.5,
            steps: 21,
        };
        let v = r.values().unwrap();
        assert_eq!(v.len(), 21);
        assert_eq!(v[20], 2.5);
        assert!((v[1] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn sweeps_need_a_grid() {
        let text = "experiment = \"narma-sweep\"\n[system]\nmodel = \"esn\"\n";
        assert!(ExperimentConfig::from_toml_str(text).is_err());
    }
}
