use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{ErcError, Result};

/// Floor applied to `x^2` before taking its logarithm.
pub const LOG_CLAMP: f64 = 1e-300;

/// Pointwise nonlinearity applied to one state component before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", rename_all = "snake_case")]
pub enum ObservationKind {
    Identity,
    Power {
        n: u32,
    },
    Cos {
        k: f64,
    },
    Sin {
        k: f64,
    },
    Tan {
        k: f64,
    },
    Exp,
    /// `exp(-x^2)`
    ExpNegSq,
    /// `exp(x^2)`
    ExpSq,
    /// `ln(x^2)`
    LogSq,
    Abs,
    Relu,
    /// `floor(2^bits y) / 2^bits` on the min-max normalized series `y`.
    Adc {
        bits: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// Divide by the series' standard deviation.
    StdDev,
    /// Map the series' range onto [0, 1].
    MinMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationFn {
    pub kind: ObservationKind,
    pub normalization: Normalization,
}

/// Observed series together with the number of `ln(x^2)` clamps applied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observed {
    pub values: Vec<f64>,
    pub clamps: usize,
}

impl ObservationKind {
    /// Normalization applied when none is requested explicitly.
    pub fn default_normalization(&self) -> Normalization {
        match self {
            ObservationKind::Cos { .. }
            | ObservationKind::Sin { .. }
            | ObservationKind::Tan { .. }
            | ObservationKind::Relu => Normalization::StdDev,
            ObservationKind::Adc { .. } => Normalization::MinMax,
            _ => Normalization::None,
        }
    }
}

impl ObservationFn {
    pub fn new(kind: ObservationKind) -> Result<Self> {
        Self::with_normalization(kind, kind.default_normalization())
    }

    pub fn with_normalization(kind: ObservationKind, normalization: Normalization) -> Result<Self> {
        match kind {
            ObservationKind::Power { n } if n < 1 => {
                return Err(ErcError::invalid("power observation needs n >= 1"))
            }
            ObservationKind::Adc { bits } if !(1..=16).contains(&bits) => {
                return Err(ErcError::invalid(format!(
                    "ADC resolution must be 1..=16 bits, got {bits}"
                )))
            }
            ObservationKind::Adc { .. } if normalization != Normalization::MinMax => {
                return Err(ErcError::invalid(
                    "ADC observation requires min-max normalization",
                ))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            normalization,
        })
    }

    pub fn identity() -> Self {
        Self {
            kind: ObservationKind::Identity,
            normalization: Normalization::None,
        }
    }

    pub fn power(n: u32) -> Result<Self> {
        Self::new(ObservationKind::Power { n })
    }

    /// Applies normalization (statistics taken over `series`) and then the nonlinearity.
    pub fn observe(&self, series: &[f64]) -> Observed {
        let (offset, scale) = match self.normalization {
            Normalization::None => (0.0, 1.0),
            Normalization::StdDev => {
                let sd = std_dev(series);
                (0.0, if sd > 0.0 { sd.recip() } else { 1.0 })
            }
            Normalization::MinMax => {
                let (lo, hi) = series
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                        (lo.min(x), hi.max(x))
                    });
                let span = hi - lo;
                (lo, if span > 0.0 { span.recip() } else { 0.0 })
            }
        };
        let mut clamps = 0;
        let values = series
            .iter()
            .map(|&x| {
                let y = (x - offset) * scale;
                self.apply(y, &mut clamps)
            })
            .collect();
        Observed { values, clamps }
    }

    #[inline]
    fn apply(&self, x: f64, clamps: &mut usize) -> f64 {
        match self.kind {
            ObservationKind::Identity => x,
            ObservationKind::Power { n } => x.powi(n as i32),
            ObservationKind::Cos { k } => (k * x).cos(),
            ObservationKind::Sin { k } => (k * x).sin(),
            ObservationKind::Tan { k } => (k * x).tan(),
            ObservationKind::Exp => x.exp(),
            ObservationKind::ExpNegSq => (-x * x).exp(),
            ObservationKind::ExpSq => (x * x).exp(),
            ObservationKind::LogSq => {
                let sq = x * x;
                if sq < LOG_CLAMP {
                    *clamps += 1;
                    LOG_CLAMP.ln()
                } else {
                    sq.ln()
                }
            }
            ObservationKind::Abs => x.abs(),
            ObservationKind::Relu => x.max(0.0),
            ObservationKind::Adc { bits } => {
                let levels = f64::from(1u32 << bits);
                (levels * x).floor() / levels
            }
        }
    }
}

impl fmt::Display for ObservationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k_str = |k: f64| {
            if k == 1.0 {
                String::new()
            } else {
                format!("{k}")
            }
        };
        match self {
            ObservationKind::Identity => write!(f, "x"),
            ObservationKind::Power { n } => write!(f, "x^{n}"),
            ObservationKind::Cos { k } => write!(f, "cos({}x)", k_str(*k)),
            ObservationKind::Sin { k } => write!(f, "sin({}x)", k_str(*k)),
            ObservationKind::Tan { k } => write!(f, "tan({}x)", k_str(*k)),
            ObservationKind::Exp => write!(f, "exp(x)"),
            ObservationKind::ExpNegSq => write!(f, "exp(-x^2)"),
            ObservationKind::ExpSq => write!(f, "exp(x^2)"),
            ObservationKind::LogSq => write!(f, "log(x^2)"),
            ObservationKind::Abs => write!(f, "|x|"),
            ObservationKind::Relu => write!(f, "relu(x)"),
            ObservationKind::Adc { bits } => write!(f, "adc{bits}(x)"),
        }
    }
}

impl fmt::Display for ObservationFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}

pub(crate) fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passes_through() {
        let s = vec![0.3, -1.2, 4.0];
        assert_eq!(ObservationFn::identity().observe(&s).values, s);
    }

    #[test]
    fn adc_quantizes_normalized_series() {
        let phi = ObservationFn::new(ObservationKind::Adc { bits: 2 }).unwrap();
        let out = phi.observe(&[0.0, 1.0, 0.6]).values;
        assert_eq!(out, vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn adc_output_lies_on_grid() {
        let phi = ObservationFn::new(ObservationKind::Adc { bits: 3 }).unwrap();
        let series: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin() * 5.0).collect();
        for y in phi.observe(&series).values {
            assert!((0.0..=1.0).contains(&y));
            assert_eq!((y * 8.0).fract(), 0.0);
        }
    }

    #[test]
    fn power_of_constant_skips_normalization() {
        let phi = ObservationFn::power(2).unwrap();
        assert_eq!(phi.normalization, Normalization::None);
        assert_eq!(phi.observe(&[3.0; 4]).values, vec![9.0; 4]);
    }

    #[test]
    fn trig_defaults_to_std_normalization() {
        let phi = ObservationFn::new(ObservationKind::Cos { k: 1.0 }).unwrap();
        assert_eq!(phi.normalization, Normalization::StdDev);
        let s = [2.0, -2.0, 2.0, -2.0];
        for (y, x) in phi.observe(&s).values.iter().zip(s) {
            assert!((y - (x / 2.0f64).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn log_square_clamps_zero() {
        let phi = ObservationFn::new(ObservationKind::LogSq).unwrap();
        let out = phi.observe(&[0.0, 1.0, 0.0]);
        assert_eq!(out.clamps, 2);
        assert_eq!(out.values[0], LOG_CLAMP.ln());
        assert_eq!(out.values[1], 0.0);
    }

    #[test]
    fn invalid_observations_are_rejected() {
        assert!(ObservationFn::power(0).is_err());
        assert!(ObservationFn::new(ObservationKind::Adc { bits: 0 }).is_err());
        assert!(ObservationFn::new(ObservationKind::Adc { bits: 17 }).is_err());
        assert!(ObservationFn::with_normalization(
            ObservationKind::Adc { bits: 4 },
            Normalization::StdDev
        )
        .is_err());
    }
}
