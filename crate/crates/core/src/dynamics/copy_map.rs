use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{ErcError, Result};

/// Quasi-periodically forced tanh map with an input-driven phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopyMapSpec {
    pub lambda: f64,
    pub omega: f64,
    pub iota: f64,
}

impl Default for CopyMapSpec {
    /// lambda = 1.5, omega = (sqrt 5 - 1) / 2, iota = 1.
    fn default() -> Self {
        Self {
            lambda: 1.5,
            omega: (5f64.sqrt() - 1.0) / 2.0,
            iota: 1.0,
        }
    }
}

impl CopyMapSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(ErcError::invalid(format!(
                "COPY map lambda must be > 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// `x' = 2 lambda tanh(x) cos(theta)`, `theta' = ((theta + 2 pi omega) mod 2 pi) + iota u`.
#[inline]
pub fn copy_map_step(spec: &CopyMapSpec, x: f64, theta: f64, u: f64) -> (f64, f64) {
    let x_next = 2.0 * spec.lambda * x.tanh() * theta.cos();
    let theta_next = (theta + TAU * spec.omega).rem_euclid(TAU) + spec.iota * u;
    (x_next, theta_next)
}
