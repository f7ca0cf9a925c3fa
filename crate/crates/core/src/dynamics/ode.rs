use serde::{Deserialize, Serialize};

use super::StateVector;
use crate::error::{ErcError, Result};

pub(crate) const MAX_ODE_DIM: usize = 3;

/// Sign convention for the Lorenz right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LorenzForm {
    /// `x' = sigma (y - x) + iota u`, `z' = x y - beta z`.
    #[default]
    Conventional,
    /// `x' = -sigma x - sigma y + iota u`, `z' = x y + beta z`, taken literally.
    /// Leaves the attractor within a few hundred steps at the standard parameters.
    Printed,
}

/// Sign of the nonlinear resistor term in the Chua circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChuaForm {
    /// `x' = a (y - x - f(x)) + iota u`: the double-scroll attractor.
    #[default]
    Conventional,
    /// `x' = a (y - x + f(x)) + iota u`, taken literally. Linearly stable, not chaotic.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OdeKind {
    Lorenz {
        sigma: f64,
        rho: f64,
        beta: f64,
        iota: f64,
        #[serde(default)]
        form: LorenzForm,
    },
    Rossler {
        a: f64,
        b: f64,
        c: f64,
        iota: f64,
    },
    Chua {
        a: f64,
        b: f64,
        m0: f64,
        m1: f64,
        iota: f64,
        #[serde(default)]
        form: ChuaForm,
    },
    /// Stuart–Landau oscillator with the input acting along the radial unit vector.
    StuartLandauRadial {
        alpha: f64,
        beta: f64,
        sigma: f64,
    },
    /// Stuart–Landau oscillator with input `sigma1 u` and noise `sigma2 v` on the x equation.
    StuartLandauXInput {
        alpha: f64,
        beta: f64,
        sigma1: f64,
        sigma2: f64,
    },
    /// `x' = -rate x`. A reference system for integrator and Lyapunov checks.
    LinearDecay {
        rate: f64,
    },
}

impl OdeKind {
    pub fn dim(&self) -> usize {
        match self {
            OdeKind::Lorenz { .. } | OdeKind::Rossler { .. } | OdeKind::Chua { .. } => 3,
            OdeKind::StuartLandauRadial { .. } | OdeKind::StuartLandauXInput { .. } => 2,
            OdeKind::LinearDecay { .. } => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OdeKind::Lorenz { .. } => "lorenz",
            OdeKind::Rossler { .. } => "rossler",
            OdeKind::Chua { .. } => "chua",
            OdeKind::StuartLandauRadial { .. } => "stuart_landau_radial",
            OdeKind::StuartLandauXInput { .. } => "stuart_landau_x",
            OdeKind::LinearDecay { .. } => "linear_decay",
        }
    }

    /// Whether the per-trial noise sequence enters the equations at all.
    pub fn uses_noise(&self) -> bool {
        matches!(self, OdeKind::StuartLandauXInput { sigma2, .. } if *sigma2 != 0.0)
    }
}

/// An input-driven ODE integrated with a fixed-step RK4 scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeSpec {
    #[serde(flatten)]
    pub kind: OdeKind,
    pub dt: f64,
}

impl OdeSpec {
    pub fn new(kind: OdeKind, dt: f64) -> Result<Self> {
        let spec = Self { kind, dt };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(ErcError::invalid(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        match self.kind {
            OdeKind::StuartLandauRadial { alpha, .. }
            | OdeKind::StuartLandauXInput { alpha, .. }
                if !(alpha > 0.0) =>
            {
                Err(ErcError::invalid(format!(
                    "Stuart-Landau alpha must be > 0, got {alpha}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// sigma = 10, rho = 28, beta = 8/3, iota = 30, dt = 0.01.
    pub fn lorenz(form: LorenzForm) -> Self {
        Self {
            kind: OdeKind::Lorenz {
                sigma: 10.0,
                rho: 28.0,
                beta: 8.0 / 3.0,
                iota: 30.0,
                form,
            },
            dt: 0.01,
        }
    }

    /// a = b = 0.2, c = 5.7, iota = 0.2, dt = 0.2.
    pub fn rossler() -> Self {
        Self {
            kind: OdeKind::Rossler {
                a: 0.2,
                b: 0.2,
                c: 5.7,
                iota: 0.2,
            },
            dt: 0.2,
        }
    }

    /// a = 15.6, b = 28, m0 = -1.143, m1 = -0.714, iota = 2, dt = 0.05.
    pub fn chua(form: ChuaForm) -> Self {
        Self {
            kind: OdeKind::Chua {
                a: 15.6,
                b: 28.0,
                m0: -1.143,
                m1: -0.714,
                iota: 2.0,
                form,
            },
            dt: 0.05,
        }
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }
}

/// Piecewise-linear Chua diode characteristic.
pub fn chua_nonlinearity(x: f64, m0: f64, m1: f64) -> f64 {
    m1 * x + 0.5 * (m0 - m1) * ((x + 1.0).abs() - (x - 1.0).abs())
}

/// Right-hand side of the ODE. `u` and `v` are treated as constants.
pub fn ode_derivative(spec: &OdeSpec, x: &StateVector, u: f64, v: f64) -> Result<StateVector> {
    check_dim(spec, &x.components)?;
    let mut out = [0.0; MAX_ODE_DIM];
    derivative_into(&spec.kind, &x.components, u, v, &mut out)?;
    Ok(StateVector {
        components: out[..spec.dim()].to_vec(),
        time_index: x.time_index,
    })
}

/// One classical RK4 step of width `spec.dt` with `u`, `v` held over the step.
pub fn rk4_step(spec: &OdeSpec, x: &StateVector, u: f64, v: f64) -> Result<StateVector> {
    check_dim(spec, &x.components)?;
    let mut state = [0.0; MAX_ODE_DIM];
    state[..spec.dim()].copy_from_slice(&x.components);
    rk4_in_place(spec, &mut state, u, v)?;
    Ok(StateVector {
        components: state[..spec.dim()].to_vec(),
        time_index: x.time_index + 1,
    })
}

fn check_dim(spec: &OdeSpec, x: &[f64]) -> Result<()> {
    if x.len() != spec.dim() {
        return Err(ErcError::DimensionMismatch {
            expected: spec.dim(),
            actual: x.len(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn rk4_in_place(
    spec: &OdeSpec,
    state: &mut [f64; MAX_ODE_DIM],
    u: f64,
    v: f64,
) -> Result<()> {
    let n = spec.dim();
    let h = spec.dt;
    let mut k1 = [0.0; MAX_ODE_DIM];
    let mut k2 = [0.0; MAX_ODE_DIM];
    let mut k3 = [0.0; MAX_ODE_DIM];
    let mut k4 = [0.0; MAX_ODE_DIM];
    let mut tmp = [0.0; MAX_ODE_DIM];

    derivative_into(&spec.kind, &state[..n], u, v, &mut k1)?;
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * h * k1[i];
    }
    derivative_into(&spec.kind, &tmp[..n], u, v, &mut k2)?;
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * h * k2[i];
    }
    derivative_into(&spec.kind, &tmp[..n], u, v, &mut k3)?;
    for i in 0..n {
        tmp[i] = state[i] + h * k3[i];
    }
    derivative_into(&spec.kind, &tmp[..n], u, v, &mut k4)?;
    for i in 0..n {
        state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

#[inline]
fn derivative_into(kind: &OdeKind, x: &[f64], u: f64, v: f64, out: &mut [f64]) -> Result<()> {
    match *kind {
        OdeKind::Lorenz {
            sigma,
            rho,
            beta,
            iota,
            form,
        } => {
            let (px, py, pz) = (x[0], x[1], x[2]);
            match form {
                LorenzForm::Conventional => {
                    out[0] = sigma * (py - px) + iota * u;
                    out[2] = px * py - beta * pz;
                }
                LorenzForm::Printed => {
                    out[0] = -sigma * px - sigma * py + iota * u;
                    out[2] = px * py + beta * pz;
                }
            }
            out[1] = px * (rho - pz) - py;
        }
        OdeKind::Rossler { a, b, c, iota } => {
            out[0] = -x[1] - x[2];
            out[1] = x[0] + a * x[1];
            out[2] = b + x[0] * x[2] - c * x[2] + iota * u;
        }
        OdeKind::Chua {
            a,
            b,
            m0,
            m1,
            iota,
            form,
        } => {
            let f = chua_nonlinearity(x[0], m0, m1);
            let f = match form {
                ChuaForm::Conventional => -f,
                ChuaForm::Printed => f,
            };
            out[0] = a * (x[1] - x[0] + f) + iota * u;
            out[1] = x[0] - x[1] + x[2];
            out[2] = -b * x[1];
        }
        OdeKind::StuartLandauRadial { alpha, beta, sigma } => {
            let r2 = x[0] * x[0] + x[1] * x[1];
            if r2 == 0.0 {
                return Err(ErcError::Singularity(
                    "radial input undefined at the origin".into(),
                ));
            }
            let inv_r = r2.sqrt().recip();
            out[0] = alpha * x[0] - beta * x[1] - x[0] * r2 + sigma * x[0] * inv_r * u;
            out[1] = beta * x[0] + alpha * x[1] - x[1] * r2 + sigma * x[1] * inv_r * u;
        }
        OdeKind::StuartLandauXInput {
            alpha,
            beta,
            sigma1,
            sigma2,
        } => {
            let r2 = x[0] * x[0] + x[1] * x[1];
            out[0] = alpha * x[0] - beta * x[1] - x[0] * r2 + sigma1 * u + sigma2 * v;
            out[1] = beta * x[0] + alpha * x[1] - x[1] * r2;
        }
        OdeKind::LinearDecay { rate } => {
            out[0] = -rate * x[0];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn radial_stuart_landau_on_unit_circle() {
        let spec = OdeSpec::new(
            OdeKind::StuartLandauRadial {
                alpha: 1.0,
                beta: 1.0,
                sigma: 0.0,
            },
            0.01,
        )
        .unwrap();
        let d = ode_derivative(&spec, &StateVector::new(vec![1.0, 0.0]), 0.7, 0.0).unwrap();
        assert_abs_diff_eq!(d.components[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.components[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn radial_input_is_singular_at_origin() {
        let spec = OdeSpec::new(
            OdeKind::StuartLandauRadial {
                alpha: 1.0,
                beta: 1.0,
                sigma: 0.5,
            },
            0.01,
        )
        .unwrap();
        let err = ode_derivative(&spec, &StateVector::zeros(2), 0.1, 0.0).unwrap_err();
        assert!(matches!(err, ErcError::Singularity(_)));
        assert!(matches!(
            rk4_step(&spec, &StateVector::zeros(2), 0.1, 0.0),
            Err(ErcError::Singularity(_))
        ));
    }

    #[test]
    fn unforced_lorenz_origin_is_equilibrium() {
        for form in [LorenzForm::Conventional, LorenzForm::Printed] {
            let spec = OdeSpec::lorenz(form);
            let d = ode_derivative(&spec, &StateVector::zeros(3), 0.0, 0.0).unwrap();
            assert_eq!(d.components, vec![0.0, 0.0, 0.0]);
            let next = rk4_step(&spec, &StateVector::zeros(3), 0.0, 0.0).unwrap();
            assert_eq!(next.components, vec![0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn chua_nonlinearity_vanishes_at_zero_and_is_odd() {
        assert_eq!(chua_nonlinearity(0.0, -1.143, -0.714), 0.0);
        for x in [-3.0, -1.0, -0.4, 0.2, 1.0, 2.5] {
            assert_abs_diff_eq!(
                chua_nonlinearity(-x, -1.143, -0.714),
                -chua_nonlinearity(x, -1.143, -0.714),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn rk4_matches_exponential_decay() {
        let spec = OdeSpec::new(OdeKind::LinearDecay { rate: 1.0 }, 0.01).unwrap();
        let next = rk4_step(&spec, &StateVector::new(vec![1.0]), 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(next.components[0], (-0.01f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(next.components[0], 0.990_049_83, epsilon = 1e-8);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(OdeSpec::new(OdeKind::LinearDecay { rate: 1.0 }, 0.0).is_err());
        assert!(OdeSpec::new(
            OdeKind::StuartLandauRadial {
                alpha: 0.0,
                beta: 1.0,
                sigma: 0.0
            },
            0.01
        )
        .is_err());
        let spec = OdeSpec::rossler();
        assert!(matches!(
            ode_derivative(&spec, &StateVector::zeros(2), 0.0, 0.0),
            Err(ErcError::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        ));
    }
}
