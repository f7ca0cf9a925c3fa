//! Input-driven dynamical systems used as reservoirs.
//!
//! Every model advances one discrete step per input sample. Continuous-time
//! models hold the input (and noise) constant over one RK4 step of width `dt`.
//! Row `t` of a trajectory is the state after consuming `inputs[t]`.

mod copy_map;
mod esn;
mod ode;

pub use copy_map::{copy_map_step, CopyMapSpec};
pub use esn::{esn_step, rescale_spectral_radius, spectral_radius, EsnSpec};
pub use ode::{
    chua_nonlinearity, ode_derivative, rk4_step, ChuaForm, LorenzForm, OdeKind, OdeSpec,
};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{ErcError, Result};
use ode::{rk4_in_place, MAX_ODE_DIM};

/// Default number of initial steps discarded before any measurement.
pub const DEFAULT_WASHOUT: usize = 1000;

/// Any state component above this magnitude is treated as a divergence.
pub const DIVERGENCE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub components: Vec<f64>,
    pub time_index: u64,
}

impl StateVector {
    pub fn new(components: Vec<f64>) -> Self {
        Self {
            components,
            time_index: 0,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }
}

/// Shared input sequence plus an optional per-trial noise sequence of the same length.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DriveSequence {
    pub inputs: Vec<f64>,
    pub noises: Option<Vec<f64>>,
}

impl DriveSequence {
    pub fn new(inputs: Vec<f64>, noises: Option<Vec<f64>>) -> Result<Self> {
        if let Some(n) = &noises {
            if n.len() != inputs.len() {
                return Err(ErcError::DimensionMismatch {
                    expected: inputs.len(),
                    actual: n.len(),
                });
            }
        }
        Ok(Self { inputs, noises })
    }

    pub fn noiseless(inputs: Vec<f64>) -> Self {
        Self {
            inputs,
            noises: None,
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    #[inline]
    pub fn noise(&self, t: usize) -> f64 {
        self.noises.as_ref().map_or(0.0, |n| n[t])
    }
}

/// i.i.d. inputs drawn from U[lo, hi].
pub fn uniform_inputs<R: Rng + ?Sized>(len: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..=hi)).collect()
}

/// i.i.d. fair bits.
pub fn binary_inputs<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..=1u8)).collect()
}

/// Any of the supported reservoir models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SystemSpec {
    Esn(EsnSpec),
    Ode(OdeSpec),
    CopyMap(CopyMapSpec),
}

impl SystemSpec {
    pub fn dim(&self) -> usize {
        match self {
            SystemSpec::Esn(e) => e.nodes(),
            SystemSpec::Ode(o) => o.dim(),
            SystemSpec::CopyMap(_) => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::Esn(_) => "esn",
            SystemSpec::Ode(o) => o.kind.name(),
            SystemSpec::CopyMap(_) => "copy_map",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SystemSpec::Esn(_) => Ok(()),
            SystemSpec::Ode(o) => o.validate(),
            SystemSpec::CopyMap(c) => c.validate(),
        }
    }

    /// Model time per step: `dt` for ODEs, 1 for maps.
    pub fn time_step(&self) -> f64 {
        match self {
            SystemSpec::Ode(o) => o.dt,
            _ => 1.0,
        }
    }

    /// Whether a per-trial noise sequence changes the dynamics.
    pub fn uses_noise(&self) -> bool {
        match self {
            SystemSpec::Esn(e) => e.noise_gain() != 0.0,
            SystemSpec::Ode(o) => o.kind.uses_noise(),
            SystemSpec::CopyMap(_) => false,
        }
    }

    /// True for components that live on the circle (compared modulo 2 pi).
    pub fn is_angle(&self, component: usize) -> bool {
        matches!(self, SystemSpec::CopyMap(_)) && component == 1
    }

    /// One noise sample: U[-1, 1] for the ESN, N(0, 1) for the x-input Stuart–Landau model.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SystemSpec::Ode(OdeSpec {
                kind: OdeKind::StuartLandauXInput { .. },
                ..
            }) => rng.sample(StandardNormal),
            _ => rng.random_range(-1.0..=1.0),
        }
    }

    /// Random initial state from a model-specific region around the attractor.
    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> StateVector {
        let mut u = |lo: f64, hi: f64| rng.random_range(lo..=hi);
        let components = match self {
            SystemSpec::Esn(e) => (0..e.nodes()).map(|_| u(-1.0, 1.0)).collect(),
            SystemSpec::CopyMap(_) => vec![u(-2.0, 2.0), u(0.0, TAU)],
            SystemSpec::Ode(o) => match o.kind {
                OdeKind::Lorenz { .. } => vec![u(-15.0, 15.0), u(-15.0, 15.0), u(5.0, 40.0)],
                OdeKind::Rossler { .. } => vec![u(-5.0, 5.0), u(-5.0, 5.0), u(0.0, 1.0)],
                OdeKind::Chua { .. } => vec![u(-0.5, 0.5), u(-0.5, 0.5), u(-0.5, 0.5)],
                OdeKind::StuartLandauRadial { alpha, .. }
                | OdeKind::StuartLandauXInput { alpha, .. } => {
                    // Uniform phase; a Cartesian box would bias the phase distribution.
                    let radius = u(0.2, 1.5) * alpha.sqrt();
                    let phase = u(-PI, PI);
                    vec![radius * phase.cos(), radius * phase.sin()]
                }
                OdeKind::LinearDecay { .. } => vec![u(-1.0, 1.0)],
            },
        };
        StateVector::new(components)
    }

    pub fn stepper(&self) -> Stepper<'_> {
        Stepper {
            spec: self,
            scratch: vec![0.0; self.dim()],
        }
    }
}

/// Advances states of one system in place, reusing scratch memory.
pub struct Stepper<'a> {
    spec: &'a SystemSpec,
    scratch: Vec<f64>,
}

impl Stepper<'_> {
    #[inline]
    pub fn step(&mut self, state: &mut [f64], u: f64, v: f64) -> Result<()> {
        match self.spec {
            SystemSpec::Esn(e) => {
                e.step_into(state, u, v, &mut self.scratch);
                state.copy_from_slice(&self.scratch);
            }
            SystemSpec::Ode(o) => {
                let n = o.dim();
                let mut buf = [0.0; MAX_ODE_DIM];
                buf[..n].copy_from_slice(state);
                rk4_in_place(o, &mut buf, u, v)?;
                state.copy_from_slice(&buf[..n]);
            }
            SystemSpec::CopyMap(c) => {
                let (x, theta) = copy_map_step(c, state[0], state[1], u);
                state[0] = x;
                state[1] = theta;
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn check_finite(state: &[f64], step: usize) -> Result<()> {
    if state.iter().all(|x| x.abs() <= DIVERGENCE_BOUND) {
        Ok(())
    } else {
        Err(ErcError::Divergence { step })
    }
}

/// A single simulated run. States are stored row-major, one row per input sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    washout: usize,
    states: Vec<f64>,
    noises: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn washout(&self) -> usize {
        self.washout
    }

    pub fn retained_len(&self) -> usize {
        self.len() - self.washout
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t * self.dim..(t + 1) * self.dim]
    }

    pub fn noises(&self) -> Option<&[f64]> {
        self.noises.as_deref()
    }

    /// Full series of one component, washout included.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.states
            .iter()
            .skip(c)
            .step_by(self.dim)
            .copied()
            .collect()
    }

    /// Series of one component over the retained (post-washout) range.
    pub fn retained_component(&self, c: usize) -> Vec<f64> {
        self.states[self.washout * self.dim..]
            .iter()
            .skip(c)
            .step_by(self.dim)
            .copied()
            .collect()
    }
}

/// Iterates the model over `drive`. The first `washout` rows are kept but marked discarded.
pub fn simulate_trajectory(
    spec: &SystemSpec,
    drive: &DriveSequence,
    init: &StateVector,
    washout: usize,
) -> Result<Trajectory> {
    let dim = spec.dim();
    if init.dim() != dim {
        return Err(ErcError::DimensionMismatch {
            expected: dim,
            actual: init.dim(),
        });
    }
    if drive.len() <= washout {
        return Err(ErcError::invalid(format!(
            "drive length {} must exceed washout {}",
            drive.len(),
            washout
        )));
    }
    let mut stepper = spec.stepper();
    let mut state = init.components.clone();
    let mut states = Vec::with_capacity(drive.len() * dim);
    for (t, &u) in drive.inputs.iter().enumerate() {
        stepper.step(&mut state, u, drive.noise(t))?;
        check_finite(&state, t)?;
        states.extend_from_slice(&state);
    }
    Ok(Trajectory {
        dim,
        washout,
        states,
        noises: drive.noises.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn esn(rho: f64, sigma: f64, seed: u64) -> SystemSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SystemSpec::Esn(EsnSpec::random(30, rho, 0.01, sigma, &mut rng).unwrap())
    }

    #[test]
    fn random_esn_hits_target_spectral_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = EsnSpec::random(30, 0.94, 0.01, 0.0, &mut rng).unwrap();
        let sr = spectral_radius(&spec.weights());
        assert!((sr - 0.94).abs() / 0.94 < 1e-6, "sr = {sr}");
        assert!(spec.input_weights().iter().all(|w| w.abs() <= 1.0));
    }

    #[test]
    fn memoryless_esn_tracks_input() {
        let SystemSpec::Esn(e) = esn(0.0, 0.0, 1) else {
            unreachable!()
        };
        let spec = SystemSpec::Esn(e.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let inputs = uniform_inputs(50, 0.0, 1.0, &mut rng);
        let drive = DriveSequence::noiseless(inputs.clone());
        let a = simulate_trajectory(&spec, &drive, &spec.sample_initial(&mut rng), 0).unwrap();
        let b = simulate_trajectory(&spec, &drive, &spec.sample_initial(&mut rng), 0).unwrap();
        assert_eq!(a, b);
        for (t, u) in inputs.iter().enumerate() {
            for (i, w) in e.input_weights().iter().enumerate() {
                assert_abs_diff_eq!(a.state(t)[i], (0.01 * w * u).tanh(), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn washout_one_short_of_length_keeps_one_row() {
        let spec = esn(0.5, 0.0, 2);
        let drive = DriveSequence::noiseless(vec![0.5; 20]);
        let traj = simulate_trajectory(&spec, &drive, &StateVector::zeros(30), 19).unwrap();
        assert_eq!(traj.retained_len(), 1);
        assert_eq!(traj.retained_component(0).len(), 1);
        assert!(simulate_trajectory(&spec, &drive, &StateVector::zeros(30), 20).is_err());
    }

    #[test]
    fn printed_lorenz_trips_the_divergence_guard() {
        let spec = SystemSpec::Ode(OdeSpec::lorenz(LorenzForm::Printed));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let drive = DriveSequence::noiseless(uniform_inputs(5000, -1.0, 1.0, &mut rng));
        let init = StateVector::new(vec![1.0, 1.0, 1.0]);
        let err = simulate_trajectory(&spec, &drive, &init, 0).unwrap_err();
        assert!(matches!(err, ErcError::Divergence { .. }), "{err:?}");
    }

    #[test]
    fn conventional_lorenz_stays_bounded() {
        let spec = SystemSpec::Ode(OdeSpec::lorenz(LorenzForm::Conventional));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let drive = DriveSequence::noiseless(uniform_inputs(10_000, -1.0, 1.0, &mut rng));
        let init = spec.sample_initial(&mut rng);
        let traj = simulate_trajectory(&spec, &drive, &init, 0).unwrap();
        for t in 0..traj.len() {
            assert!(traj
                .state(t)
                .iter()
                .all(|x| x.is_finite() && x.abs() < 100.0));
        }
    }

    #[test]
    fn esn_echo_state_property() {
        let spec = esn(0.9, 0.0, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let drive = DriveSequence::noiseless(uniform_inputs(1000, 0.0, 1.0, &mut rng));
        let a = simulate_trajectory(&spec, &drive, &spec.sample_initial(&mut rng), 0).unwrap();
        let b = simulate_trajectory(&spec, &drive, &spec.sample_initial(&mut rng), 0).unwrap();
        let last = a.len() - 1;
        let gap = a
            .state(last)
            .iter()
            .zip(b.state(last))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-8, "gap = {gap}");
    }

    #[test]
    fn drive_lengths_must_match() {
        assert!(DriveSequence::new(vec![0.0; 3], Some(vec![0.0; 2])).is_err());
        assert!(DriveSequence::new(vec![0.0; 3], Some(vec![0.0; 3])).is_ok());
    }
}
