use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StateVector;
use crate::error::{ErcError, Result};

/// Echo state network with additive, input-aligned noise:
/// `r' = tanh(W r + alpha W_in u + sigma W_in v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsnSpec {
    nodes: usize,
    spectral_radius: f64,
    input_gain: f64,
    noise_gain: f64,
    /// Unscaled recurrent matrix, row-major.
    raw_weights: Vec<f64>,
    /// `raw_weights` rescaled to `spectral_radius`, row-major.
    weights: Vec<f64>,
    input_weights: Vec<f64>,
}

impl EsnSpec {
    /// Draws `W` and `W_in` entrywise from U[-1, 1] and rescales `W` to the
    /// requested spectral radius.
    pub fn random<R: Rng + ?Sized>(
        nodes: usize,
        spectral_radius: f64,
        input_gain: f64,
        noise_gain: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if nodes == 0 {
            return Err(ErcError::invalid("ESN needs at least one node"));
        }
        let raw: Vec<f64> = (0..nodes * nodes)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        let input_weights: Vec<f64> = (0..nodes).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self::from_raw(raw, input_weights, spectral_radius, input_gain, noise_gain)
    }

    /// Builds a spec from an unscaled row-major matrix, rescaling it to `spectral_radius`.
    pub fn from_raw(
        raw_weights: Vec<f64>,
        input_weights: Vec<f64>,
        spectral_radius: f64,
        input_gain: f64,
        noise_gain: f64,
    ) -> Result<Self> {
        let nodes = input_weights.len();
        if raw_weights.len() != nodes * nodes {
            return Err(ErcError::DimensionMismatch {
                expected: nodes * nodes,
                actual: raw_weights.len(),
            });
        }
        let raw = DMatrix::from_row_slice(nodes, nodes, &raw_weights);
        let scaled = rescale_spectral_radius(&raw, spectral_radius)?;
        Ok(Self {
            nodes,
            spectral_radius,
            input_gain,
            noise_gain,
            raw_weights,
            weights: row_major(&scaled),
            input_weights,
        })
    }

    /// Uses `weights` exactly as given; the stored spectral radius is measured, not imposed.
    pub fn from_weights(
        weights: Vec<f64>,
        input_weights: Vec<f64>,
        input_gain: f64,
        noise_gain: f64,
    ) -> Result<Self> {
        let nodes = input_weights.len();
        if weights.len() != nodes * nodes {
            return Err(ErcError::DimensionMismatch {
                expected: nodes * nodes,
                actual: weights.len(),
            });
        }
        let spectral_radius = spectral_radius(&DMatrix::from_row_slice(nodes, nodes, &weights));
        Ok(Self {
            nodes,
            spectral_radius,
            input_gain,
            noise_gain,
            raw_weights: weights.clone(),
            weights,
            input_weights,
        })
    }

    /// Same raw matrix and input weights, rescaled to a new spectral radius.
    pub fn with_spectral_radius(&self, spectral_radius: f64) -> Result<Self> {
        Self::from_raw(
            self.raw_weights.clone(),
            self.input_weights.clone(),
            spectral_radius,
            self.input_gain,
            self.noise_gain,
        )
    }

    pub fn with_gains(mut self, input_gain: f64, noise_gain: f64) -> Self {
        self.input_gain = input_gain;
        self.noise_gain = noise_gain;
        self
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    pub fn input_gain(&self) -> f64 {
        self.input_gain
    }

    pub fn noise_gain(&self) -> f64 {
        self.noise_gain
    }

    pub fn weights(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.nodes, self.nodes, &self.weights)
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input_weights
    }

    /// In-place update used by the simulation loops; `out` must not alias `r`.
    #[inline]
    pub(crate) fn step_into(&self, r: &[f64], u: f64, v: f64, out: &mut [f64]) {
        let d = self.nodes;
        for (i, o) in out.iter_mut().enumerate().take(d) {
            let acc = dot(&self.weights[i * d..(i + 1) * d], r);
            let w_in = self.input_weights[i];
            *o = (acc + self.input_gain * w_in * u + self.noise_gain * w_in * v).tanh();
        }
    }
}

/// Dot product with four independent accumulators.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// One ESN update. Fails when `r` does not have `spec.nodes()` components.
pub fn esn_step(spec: &EsnSpec, r: &StateVector, u: f64, v: f64) -> Result<StateVector> {
    if r.components.len() != spec.nodes {
        return Err(ErcError::DimensionMismatch {
            expected: spec.nodes,
            actual: r.components.len(),
        });
    }
    let mut out = vec![0.0; spec.nodes];
    spec.step_into(&r.components, u, v, &mut out);
    Ok(StateVector {
        components: out,
        time_index: r.time_index + 1,
    })
}

/// Largest eigenvalue magnitude, from the real Schur form.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Returns `w_raw * (rho / sr(w_raw))`; `rho = 0` gives the zero matrix.
pub fn rescale_spectral_radius(w_raw: &DMatrix<f64>, rho: f64) -> Result<DMatrix<f64>> {
    if !w_raw.is_square() {
        return Err(ErcError::invalid("recurrent matrix must be square"));
    }
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(ErcError::invalid(format!(
            "spectral radius must be >= 0, got {rho}"
        )));
    }
    if rho == 0.0 {
        return Ok(DMatrix::zeros(w_raw.nrows(), w_raw.ncols()));
    }
    let sr = spectral_radius(w_raw);
    // Eigenvalues of a nilpotent matrix come back as rounding noise around zero.
    let scale = w_raw.norm().max(f64::MIN_POSITIVE);
    if sr <= 1e-12 * scale {
        return Err(ErcError::DegenerateMatrix(
            "spectral radius is zero; cannot rescale".into(),
        ));
    }
    Ok(w_raw * (rho / sr))
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(w: f64) -> EsnSpec {
        EsnSpec::from_weights(vec![w], vec![1.0], 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_matrix_keeps_origin_fixed() {
        let spec = EsnSpec::from_weights(vec![0.0; 4], vec![0.3, -0.7], 2.0, 5.0).unwrap();
        let r = StateVector::zeros(2);
        let next = esn_step(&spec, &r, 0.0, 0.0).unwrap();
        assert_eq!(next.components, vec![0.0, 0.0]);
        assert_eq!(next.time_index, 1);
    }

    #[test]
    fn scalar_updates_match_hand_evaluation() {
        let spec = scalar(0.0).with_gains(1.0, 0.0);
        let next = esn_step(&spec, &StateVector::zeros(1), 1.0, 0.0).unwrap();
        assert_relative_eq!(next.components[0], 0.761_594_155_955_764_9, epsilon = 1e-12);

        let spec = scalar(0.5);
        let r = StateVector::new(vec![0.2]);
        let next = esn_step(&spec, &r, 0.3, -0.3).unwrap();
        assert_relative_eq!(next.components[0], 0.1f64.tanh(), epsilon = 1e-15);
        assert_relative_eq!(next.components[0], 0.099_667_994_624_955_8, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let spec = scalar(0.5);
        let err = esn_step(&spec, &StateVector::zeros(3), 0.0, 0.0).unwrap_err();
        assert_eq!(
            err,
            ErcError::DimensionMismatch {
                expected: 1,
                actual: 3
            }
        );
    }

    #[test]
    fn rescale_identity_and_zero() {
        let id = DMatrix::<f64>::identity(2, 2);
        let half = rescale_spectral_radius(&id, 0.5).unwrap();
        assert_relative_eq!(half, id * 0.5, epsilon = 1e-14);

        let m = DMatrix::from_row_slice(2, 2, &[0.3, -1.0, 2.0, 0.1]);
        assert_eq!(
            rescale_spectral_radius(&m, 0.0).unwrap(),
            DMatrix::zeros(2, 2)
        );
    }

    #[test]
    fn nilpotent_matrix_cannot_be_rescaled() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        assert!(matches!(
            rescale_spectral_radius(&m, 0.9),
            Err(ErcError::DegenerateMatrix(_))
        ));
    }
}
