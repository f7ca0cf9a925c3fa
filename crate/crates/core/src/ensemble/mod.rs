//! Ensembles of identical systems sharing one input, observation functions
//! and the weighted ensemble average.
//!
//! Trial `l` draws its initial condition (and, when enabled, its noise) from
//! a ChaCha stream selected by `(master_seed, l)`, so any trial can be
//! regenerated on its own. Averages are summed in fixed chunks of
//! [`SUM_CHUNK`] trials and the chunk partials are combined in order, which
//! keeps results bit-identical for any thread count.

mod features;
mod observation;

pub use features::{assemble_features, FeatureLabel, FeatureMatrix, FeatureSeries};
pub use observation::{Normalization, ObservationFn, ObservationKind, Observed, LOG_CLAMP};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ops::Range;

use crate::dynamics::{simulate_trajectory, DriveSequence, SystemSpec, Trajectory};
use crate::error::{ErcError, Result};

/// Trials per summation chunk.
pub const SUM_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weights {
    /// `1 / L` for every trial.
    Uniform,
    Explicit(Vec<f64>),
}

/// What the streaming average does with a trial whose state diverges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergencePolicy {
    /// Fail the whole ensemble.
    #[default]
    Abort,
    /// Drop the trial and renormalize the remaining weights.
    Exclude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub trials: usize,
    pub weights: Weights,
    pub master_seed: u64,
    pub per_trial_noise: bool,
    #[serde(default)]
    pub on_divergence: DivergencePolicy,
    /// Treat a trial as diverged once any state component exceeds this magnitude.
    #[serde(default)]
    pub escape_bound: Option<f64>,
}

impl EnsembleConfig {
    pub fn uniform(trials: usize, master_seed: u64, per_trial_noise: bool) -> Self {
        Self {
            trials,
            weights: Weights::Uniform,
            master_seed,
            per_trial_noise,
            on_divergence: DivergencePolicy::Abort,
            escape_bound: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(ErcError::invalid("ensemble needs at least one trial"));
        }
        if let Weights::Explicit(w) = &self.weights {
            if w.len() != self.trials {
                return Err(ErcError::DimensionMismatch {
                    expected: self.trials,
                    actual: w.len(),
                });
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(ErcError::invalid("ensemble weights must be finite"));
            }
        }
        if self
            .escape_bound
            .is_some_and(|b| !(b.is_finite() && b > 0.0))
        {
            return Err(ErcError::invalid(
                "escape bound must be positive and finite",
            ));
        }
        Ok(())
    }

    pub fn weight(&self, trial: usize) -> f64 {
        match &self.weights {
            Weights::Uniform => 1.0 / self.trials as f64,
            Weights::Explicit(w) => w[trial],
        }
    }

    pub fn weight_vec(&self) -> Vec<f64> {
        (0..self.trials).map(|l| self.weight(l)).collect()
    }
}

/// Independent generator for one trial.
pub fn trial_rng(master_seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial as u64);
    rng
}

/// Simulates trial `trial` exactly as [`build_ensemble`] would.
pub fn simulate_trial(
    spec: &SystemSpec,
    cfg: &EnsembleConfig,
    inputs: &[f64],
    washout: usize,
    trial: usize,
) -> Result<Trajectory> {
    let mut rng = trial_rng(cfg.master_seed, trial);
    let init = spec.sample_initial(&mut rng);
    let noises = (cfg.per_trial_noise && spec.uses_noise()).then(|| {
        (0..inputs.len())
            .map(|_| spec.sample_noise(&mut rng))
            .collect()
    });
    let drive = DriveSequence {
        inputs: inputs.to_vec(),
        noises,
    };
    let tag = |e| ErcError::Trial {
        trial,
        source: Box::new(e),
    };
    let traj = simulate_trajectory(spec, &drive, &init, washout).map_err(tag)?;
    if let Some(bound) = cfg.escape_bound {
        if let Some(step) = (0..traj.len()).find(|&t| traj.state(t).iter().any(|x| x.abs() > bound))
        {
            return Err(tag(ErcError::Escape { step, bound }));
        }
    }
    Ok(traj)
}

/// All trials of one ensemble, kept in memory. Always aborts on divergence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBundle {
    pub inputs: Vec<f64>,
    pub trials: Vec<Trajectory>,
    pub washout: usize,
}

impl TrajectoryBundle {
    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.trials.first().map_or(0, Trajectory::dim)
    }

    pub fn retained_len(&self) -> usize {
        self.inputs.len() - self.washout
    }
}

pub fn build_ensemble(
    spec: &SystemSpec,
    cfg: &EnsembleConfig,
    inputs: &[f64],
    washout: usize,
) -> Result<TrajectoryBundle> {
    spec.validate()?;
    cfg.validate()?;
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|l| simulate_trial(spec, cfg, inputs, washout, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryBundle {
        inputs: inputs.to_vec(),
        trials,
        washout,
    })
}

/// Per-trial observed series over the retained window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservedTrials {
    pub series: Vec<Vec<f64>>,
    pub clamps: usize,
}

pub fn apply_observation(
    phi: &ObservationFn,
    bundle: &TrajectoryBundle,
    component: usize,
) -> Result<ObservedTrials> {
    if component >= bundle.dim() {
        return Err(ErcError::invalid(format!(
            "component {component} out of range for dimension {}",
            bundle.dim()
        )));
    }
    let mut out = ObservedTrials::default();
    for trial in &bundle.trials {
        let obs = phi.observe(&trial.retained_component(component));
        out.clamps += obs.clamps;
        out.series.push(obs.values);
    }
    Ok(out)
}

/// `sum_l w_l s_l` pointwise, in the fixed chunked order.
pub fn ensemble_average(observed: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    if observed.len() != weights.len() {
        return Err(ErcError::DimensionMismatch {
            expected: observed.len(),
            actual: weights.len(),
        });
    }
    let n = observed.first().map_or(0, Vec::len);
    if let Some(bad) = observed.iter().find(|s| s.len() != n) {
        return Err(ErcError::DimensionMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    let partials: Vec<Vec<f64>> = observed
        .par_chunks(SUM_CHUNK)
        .zip(weights.par_chunks(SUM_CHUNK))
        .map(|(series, w)| {
            let mut acc = vec![0.0; n];
            for (s, &wl) in series.iter().zip(w) {
                axpy(&mut acc, wl, s);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for p in &partials {
        add_assign(&mut total, p);
    }
    Ok(total)
}

/// One averaged feature: observation `phi` of state component `component`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub component: usize,
    pub phi: ObservationFn,
}

impl Observable {
    pub fn new(component: usize, phi: ObservationFn) -> Self {
        Self { component, phi }
    }

    /// Identity observation of every component.
    pub fn all_identity(dim: usize) -> Vec<Self> {
        (0..dim)
            .map(|c| Self::new(c, ObservationFn::identity()))
            .collect()
    }

    /// `x^1 ..= x^max_power` of every component, grouped by power.
    pub fn powers(dim: usize, max_power: u32) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for n in 1..=max_power {
            let phi = ObservationFn::power(n)?;
            out.extend((0..dim).map(|c| Self::new(c, phi)));
        }
        Ok(out)
    }

    pub fn label(&self, system: &str, averaged: bool) -> FeatureLabel {
        FeatureLabel {
            system: system.to_string(),
            component: self.component,
            phi: self.phi.to_string(),
            averaged,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObserveOptions {
    /// Trials whose individual observed series are returned as well.
    pub keep_trials: Vec<usize>,
    /// Also accumulate `sum_l w_l phi^2`.
    pub second_moments: bool,
}

/// Weighted ensemble averages of several observables over the retained window.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAverages {
    pub observables: Vec<Observable>,
    /// One series per observable.
    pub means: Vec<Vec<f64>>,
    pub second_moments: Option<Vec<Vec<f64>>>,
    /// `(trial, one series per observable)` for each requested trial.
    pub kept: Vec<(usize, Vec<Vec<f64>>)>,
    /// Weighted mean over trials of each observable's temporal variance.
    pub temporal_variance: Vec<f64>,
    pub clamps: usize,
    /// Trials dropped under [`DivergencePolicy::Exclude`], in order.
    pub excluded: Vec<usize>,
    pub washout: usize,
}

impl EnsembleAverages {
    pub fn retained_len(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Per-time spread across trials, `sqrt(E[phi^2] - E[phi]^2)`.
    pub fn spread(&self, observable: usize) -> Option<Vec<f64>> {
        let m2 = &self.second_moments.as_ref()?[observable];
        Some(
            self.means[observable]
                .iter()
                .zip(m2)
                .map(|(m, s)| (s - m * m).max(0.0).sqrt())
                .collect(),
        )
    }

    /// [`synchronization_index`] computed from the streamed moments of the
    /// given observables (normally the identity of every component).
    /// Requires second moments and uniform weights.
    pub fn synchronization_index(&self, observables: &[usize]) -> Result<f64> {
        if self.second_moments.is_none() {
            return Err(ErcError::invalid(
                "synchronization index needs second moments",
            ));
        }
        let n = self.retained_len();
        let mut across = vec![0.0; n];
        let mut pooled = 0.0;
        for &f in observables {
            let spread = self.spread(f).unwrap_or_default();
            for (a, s) in across.iter_mut().zip(spread) {
                *a += s * s;
            }
            pooled += self.temporal_variance[f];
        }
        let across = across.iter().map(|v| v.sqrt()).sum::<f64>() / n as f64;
        let pooled = pooled.sqrt();
        if !(pooled > 0.0) {
            return Err(ErcError::UndefinedMetric(
                "trajectories are constant; synchronization index undefined".into(),
            ));
        }
        Ok((1.0 - across / pooled).clamp(0.0, 1.0))
    }

    pub fn kept_trial(&self, trial: usize) -> Option<&[Vec<f64>]> {
        self.kept
            .iter()
            .find(|(l, _)| *l == trial)
            .map(|(_, s)| s.as_slice())
    }
}

struct ChunkPartial {
    sums: Vec<Vec<f64>>,
    squares: Option<Vec<Vec<f64>>>,
    kept: Vec<(usize, Vec<Vec<f64>>)>,
    temporal: Vec<f64>,
    clamps: usize,
    excluded: Vec<usize>,
    excluded_weight: f64,
}

/// Simulates trials one at a time and accumulates the weighted averages
/// without holding the whole ensemble. Bit-identical to
/// [`ensemble_average`] applied to [`apply_observation`] output.
pub fn ensemble_observe(
    spec: &SystemSpec,
    cfg: &EnsembleConfig,
    inputs: &[f64],
    washout: usize,
    observables: &[Observable],
    opts: &ObserveOptions,
) -> Result<EnsembleAverages> {
    spec.validate()?;
    cfg.validate()?;
    if observables.is_empty() {
        return Err(ErcError::invalid("no observables requested"));
    }
    if let Some(o) = observables.iter().find(|o| o.component >= spec.dim()) {
        return Err(ErcError::invalid(format!(
            "component {} out of range for dimension {}",
            o.component,
            spec.dim()
        )));
    }
    if inputs.len() <= washout {
        return Err(ErcError::invalid(format!(
            "drive length {} must exceed washout {washout}",
            inputs.len()
        )));
    }
    let n = inputs.len() - washout;
    let nf = observables.len();

    let chunk_partial = |c: usize| -> Result<ChunkPartial> {
        let mut part = ChunkPartial {
            sums: vec![vec![0.0; n]; nf],
            squares: opts.second_moments.then(|| vec![vec![0.0; n]; nf]),
            kept: Vec::new(),
            temporal: vec![0.0; nf],
            clamps: 0,
            excluded: Vec::new(),
            excluded_weight: 0.0,
        };
        let mut components: Vec<Option<Vec<f64>>> = vec![None; spec.dim()];
        let mut observed = vec![0.0; n];
        for l in c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(cfg.trials) {
            let traj = match simulate_trial(spec, cfg, inputs, washout, l) {
                Err(e) if e.is_divergence() && cfg.on_divergence == DivergencePolicy::Exclude => {
                    part.excluded.push(l);
                    part.excluded_weight += cfg.weight(l);
                    continue;
                }
                r => r?,
            };
            components.iter_mut().for_each(|s| *s = None);
            let w = cfg.weight(l);
            let keep = opts.keep_trials.contains(&l);
            let mut kept = Vec::new();
            for (f, o) in observables.iter().enumerate() {
                let series = components[o.component]
                    .get_or_insert_with(|| traj.retained_component(o.component));
                let obs = o.phi.observe(series);
                part.clamps += obs.clamps;
                part.temporal[f] += w * observation::std_dev(&obs.values).powi(2);
                observed.copy_from_slice(&obs.values);
                axpy(&mut part.sums[f], w, &observed);
                if let Some(sq) = part.squares.as_mut() {
                    for (a, x) in sq[f].iter_mut().zip(&observed) {
                        *a += w * (x * x);
                    }
                }
                if keep {
                    kept.push(obs.values);
                }
            }
            if keep {
                part.kept.push((l, kept));
            }
        }
        Ok(part)
    };

    let n_chunks = cfg.trials.div_ceil(SUM_CHUNK);
    let batch = rayon::current_num_threads().max(1);
    let mut means = vec![vec![0.0; n]; nf];
    let mut squares = opts.second_moments.then(|| vec![vec![0.0; n]; nf]);
    let mut kept = Vec::new();
    let mut temporal = vec![0.0; nf];
    let mut clamps = 0;
    let mut excluded = Vec::new();
    let mut excluded_weight = 0.0;
    for start in (0..n_chunks).step_by(batch) {
        let partials: Vec<Result<ChunkPartial>> = (start..(start + batch).min(n_chunks))
            .into_par_iter()
            .map(chunk_partial)
            .collect();
        for p in partials {
            let p = p?;
            for (m, s) in means.iter_mut().zip(&p.sums) {
                add_assign(m, s);
            }
            if let (Some(total), Some(part)) = (squares.as_mut(), &p.squares) {
                for (m, s) in total.iter_mut().zip(part) {
                    add_assign(m, s);
                }
            }
            kept.extend(p.kept);
            for (t, v) in temporal.iter_mut().zip(&p.temporal) {
                *t += v;
            }
            clamps += p.clamps;
            excluded.extend(p.excluded);
            excluded_weight += p.excluded_weight;
        }
    }
    if !excluded.is_empty() {
        let total: f64 = cfg.weight_vec().iter().sum();
        let kept_weight = total - excluded_weight;
        if excluded.len() == cfg.trials || !(kept_weight.abs() > 0.0) {
            return Err(ErcError::invalid(format!(
                "{} of {} trials diverged; nothing left to average",
                excluded.len(),
                cfg.trials
            )));
        }
        let scale = total / kept_weight;
        for series in means.iter_mut().chain(squares.iter_mut().flatten()) {
            series.iter_mut().for_each(|x| *x *= scale);
        }
        temporal.iter_mut().for_each(|x| *x *= scale);
    }
    Ok(EnsembleAverages {
        observables: observables.to_vec(),
        means,
        second_moments: squares,
        kept,
        temporal_variance: temporal,
        clamps,
        excluded,
        washout,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInvariance {
    /// Largest `|E_a[phi](window_a) - E_b[phi](window_b)|` over aligned steps.
    pub max_deviation: f64,
    /// RMS across-trial spread of `phi` over both windows.
    pub spread: f64,
    pub trials: usize,
}

impl TimeInvariance {
    /// Monte-Carlo standard error scale `spread / sqrt(L)`.
    pub fn standard_error(&self) -> f64 {
        self.spread / (self.trials as f64).sqrt()
    }
}

/// Compares `E[phi(x_component)]` over two windows (absolute step indices) of
/// two independent ensembles. The caller arranges equal input blocks.
pub fn time_invariance_check(
    spec: &SystemSpec,
    cfg: &EnsembleConfig,
    observable: Observable,
    inputs: &[f64],
    window_a: Range<usize>,
    window_b: Range<usize>,
    washout: usize,
) -> Result<TimeInvariance> {
    if window_a.len() != window_b.len() || window_a.is_empty() {
        return Err(ErcError::invalid(
            "windows must be nonempty and of equal length",
        ));
    }
    if window_a.start < washout || window_b.start < washout {
        return Err(ErcError::invalid("windows must start after the washout"));
    }
    if window_a.end > inputs.len() || window_b.end > inputs.len() {
        return Err(ErcError::invalid("window extends past the drive"));
    }
    let opts = ObserveOptions {
        keep_trials: Vec::new(),
        second_moments: true,
    };
    let obs = [observable];
    let a = ensemble_observe(spec, cfg, inputs, washout, &obs, &opts)?;
    let cfg_b = EnsembleConfig {
        master_seed: cfg.master_seed.wrapping_add(0x9E37_79B9_7F4A_7C15),
        ..cfg.clone()
    };
    let b = ensemble_observe(spec, &cfg_b, inputs, washout, &obs, &opts)?;
    let (sa, sb) = (
        a.spread(0).unwrap_or_default(),
        b.spread(0).unwrap_or_default(),
    );
    let steps = window_a.len() as f64;
    let mut max_deviation: f64 = 0.0;
    let mut var_sum = 0.0;
    for (ta, tb) in window_a.zip(window_b) {
        let (ia, ib) = (ta - washout, tb - washout);
        max_deviation = max_deviation.max((a.means[0][ia] - b.means[0][ib]).abs());
        var_sum += sa[ia].powi(2) + sb[ib].powi(2);
    }
    Ok(TimeInvariance {
        max_deviation,
        spread: (var_sum / (2.0 * steps)).sqrt(),
        trials: cfg.trials,
    })
}

/// 1 minus the mean across-trial spread relative to the pooled per-trial
/// temporal spread, over the retained window and all components; clipped to [0, 1].
pub fn synchronization_index(bundle: &TrajectoryBundle) -> Result<f64> {
    if bundle.len() < 2 {
        return Err(ErcError::invalid(
            "synchronization index needs at least two trials",
        ));
    }
    let dim = bundle.dim();
    let n = bundle.retained_len();
    let w = bundle.washout;
    let l = bundle.len() as f64;

    let mut across = 0.0;
    for t in w..w + n {
        let mut var_t = 0.0;
        for c in 0..dim {
            let mean = bundle.trials.iter().map(|tr| tr.state(t)[c]).sum::<f64>() / l;
            var_t += bundle
                .trials
                .iter()
                .map(|tr| (tr.state(t)[c] - mean).powi(2))
                .sum::<f64>()
                / l;
        }
        across += var_t.sqrt();
    }
    across /= n as f64;

    let mut pooled = 0.0;
    for tr in &bundle.trials {
        for c in 0..dim {
            pooled += observation::std_dev(&tr.retained_component(c)).powi(2);
        }
    }
    let pooled = (pooled / l).sqrt();
    if pooled <= 0.0 {
        return Err(ErcError::UndefinedMetric(
            "trajectories are constant; synchronization index undefined".into(),
        ));
    }
    Ok((1.0 - across / pooled).clamp(0.0, 1.0))
}

#[inline]
fn axpy(acc: &mut [f64], w: f64, x: &[f64]) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += w * v;
    }
}

#[inline]
fn add_assign(acc: &mut [f64], x: &[f64]) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += v;
    }
}
