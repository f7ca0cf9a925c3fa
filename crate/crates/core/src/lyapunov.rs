//! Largest (conditional) Lyapunov exponent by two-trajectory renormalization,
//! and bifurcation scans over a model parameter.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::io::Write;

use crate::capacity::fmt_f64;
use crate::dynamics::{check_finite, uniform_inputs, DriveSequence, StateVector, SystemSpec};
use crate::error::{ErcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovConfig {
    pub total_steps: usize,
    /// `None` picks 1 for maps and 10 for ODEs.
    pub renorm_interval: Option<usize>,
    pub epsilon0: f64,
    pub transient: usize,
    /// Seeds the random perturbation direction.
    pub seed: u64,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            total_steps: 100_000,
            renorm_interval: None,
            epsilon0: 1e-8,
            transient: 1000,
            seed: 0,
        }
    }
}

impl LyapunovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon0 > 0.0) {
            return Err(ErcError::invalid("initial separation must be > 0"));
        }
        if self.renorm_interval == Some(0) {
            return Err(ErcError::invalid("renormalization interval must be >= 1"));
        }
        if self.total_steps == 0 {
            return Err(ErcError::invalid("total steps must be >= 1"));
        }
        Ok(())
    }

    fn interval_for(&self, spec: &SystemSpec) -> usize {
        self.renorm_interval.unwrap_or(match spec {
            SystemSpec::Ode(_) => 10,
            _ => 1,
        })
    }
}

fn separation(spec: &SystemSpec, a: &[f64], b: &[f64], out: &mut [f64]) {
    for (c, o) in out.iter_mut().enumerate() {
        let mut d = b[c] - a[c];
        if spec.is_angle(c) {
            d = (d + PI).rem_euclid(TAU) - PI;
        }
        *o = d;
    }
}

/// Average logarithmic growth rate of a small separation between two copies
/// driven by the same input and noise, per unit model time.
///
/// The first `transient` steps are run (with renormalization) but not counted.
pub fn max_lyapunov(
    spec: &SystemSpec,
    drive: &DriveSequence,
    init: &StateVector,
    cfg: &LyapunovConfig,
) -> Result<f64> {
    spec.validate()?;
    cfg.validate()?;
    let dim = spec.dim();
    if init.dim() != dim {
        return Err(ErcError::DimensionMismatch {
            expected: dim,
            actual: init.dim(),
        });
    }
    let steps = cfg.transient + cfg.total_steps;
    if drive.len() < steps {
        return Err(ErcError::invalid(format!(
            "drive has {} steps, need {steps}",
            drive.len()
        )));
    }
    let interval = cfg.interval_for(spec);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    dir.iter_mut().for_each(|x| *x *= cfg.epsilon0 / norm);

    let mut x = init.components.clone();
    let mut y: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + d).collect();
    let mut sa = spec.stepper();
    let mut sb = spec.stepper();
    let mut delta = vec![0.0; dim];
    let mut log_sum = 0.0;
    let mut counted = 0usize;

    for t in 0..steps {
        let (u, v) = (drive.inputs[t], drive.noise(t));
        sa.step(&mut x, u, v)?;
        sb.step(&mut y, u, v)?;
        check_finite(&x, t)?;
        check_finite(&y, t)?;
        if (t + 1) % interval != 0 {
            continue;
        }
        separation(spec, &x, &y, &mut delta);
        let d = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(d > 0.0) {
            return Err(ErcError::DegeneratePerturbation { step: t });
        }
        if t >= cfg.transient {
            log_sum += (d / cfg.epsilon0).ln();
            counted += interval;
        }
        let scale = cfg.epsilon0 / d;
        for c in 0..dim {
            y[c] = x[c] + delta[c] * scale;
        }
    }
    if counted == 0 {
        return Err(ErcError::invalid(
            "no renormalization fell after the transient",
        ));
    }
    Ok(log_sum / (counted as f64 * spec.time_step()))
}

/// Input and noise used at every scan point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanDrive {
    /// `None` runs the autonomous system.
    pub input_range: Option<(f64, f64)>,
    pub noise: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub parameter: f64,
    /// First state component sampled at a fixed stride after the washout.
    pub samples: Vec<f64>,
    pub lambda: Option<f64>,
    /// Set when the point diverged or otherwise failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationScan {
    pub points: Vec<BifurcationPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub washout: usize,
    pub samples: usize,
    pub stride: usize,
    pub lyapunov: LyapunovConfig,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            washout: 1000,
            samples: 200,
            stride: 1,
            lyapunov: LyapunovConfig {
                total_steps: 20_000,
                ..LyapunovConfig::default()
            },
        }
    }
}

/// Samples and Lyapunov exponent for each parameter in `grid` (strictly increasing).
/// Failures at one point are recorded and the scan continues.
pub fn bifurcation_scan<F>(
    family: F,
    grid: &[f64],
    drive: &ScanDrive,
    settings: &ScanSettings,
) -> Result<BifurcationScan>
where
    F: Fn(f64) -> Result<SystemSpec>,
{
    if grid.is_empty() {
        return Err(ErcError::invalid("empty parameter grid"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ErcError::invalid(
            "parameter grid must be strictly increasing",
        ));
    }
    let sample_steps = settings.washout + settings.samples * settings.stride.max(1);
    let lyap_steps = settings.lyapunov.transient + settings.lyapunov.total_steps;
    let len = sample_steps.max(lyap_steps);
    let mut points = Vec::with_capacity(grid.len());
    for &p in grid {
        let outcome = family(p).and_then(|spec| scan_point(&spec, drive, settings, len));
        points.push(match outcome {
            Ok((samples, lambda)) => BifurcationPoint {
                parameter: p,
                samples,
                lambda: Some(lambda),
                error: None,
            },
            Err(e) => BifurcationPoint {
                parameter: p,
                samples: Vec::new(),
                lambda: None,
                error: Some(e.to_string()),
            },
        });
    }
    Ok(BifurcationScan { points })
}

fn scan_point(
    spec: &SystemSpec,
    drive: &ScanDrive,
    settings: &ScanSettings,
    len: usize,
) -> Result<(Vec<f64>, f64)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(drive.seed);
    let inputs = match drive.input_range {
        Some((lo, hi)) => uniform_inputs(len, lo, hi, &mut rng),
        None => vec![0.0; len],
    };
    let noises = (drive.noise && spec.uses_noise())
        .then(|| (0..len).map(|_| spec.sample_noise(&mut rng)).collect());
    let seq = DriveSequence::new(inputs, noises)?;
    let init = spec.sample_initial(&mut rng);

    let mut stepper = spec.stepper();
    let mut state = init.components.clone();
    let stride = settings.stride.max(1);
    let mut samples = Vec::with_capacity(settings.samples);
    for t in 0..settings.washout + settings.samples * stride {
        stepper.step(&mut state, seq.inputs[t], seq.noise(t))?;
        check_finite(&state, t)?;
        if t >= settings.washout && (t - settings.washout) % stride == stride - 1 {
            samples.push(state[0]);
        }
    }
    let lambda = max_lyapunov(spec, &seq, &init, &settings.lyapunov)?;
    Ok((samples, lambda))
}

impl BifurcationScan {
    /// Long format: `parameter, kind, index, value` with `kind` in {sample, lambda, error}.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let io = |e: csv::Error| ErcError::Io(e.to_string());
        out.write_record(["parameter", "kind", "index", "value"])
            .map_err(io)?;
        for p in &self.points {
            let param = fmt_f64(p.parameter);
            if let Some(l) = p.lambda {
                out.write_record([param.as_str(), "lambda", "0", &fmt_f64(l)])
                    .map_err(io)?;
            }
            if let Some(e) = &p.error {
                out.write_record([param.as_str(), "error", "0", e])
                    .map_err(io)?;
            }
            for (i, s) in p.samples.iter().enumerate() {
                out.write_record([param.as_str(), "sample", &i.to_string(), &fmt_f64(*s)])
                    .map_err(io)?;
            }
        }
        out.flush().map_err(|e| ErcError::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{EsnSpec, OdeKind, OdeSpec};

    fn esn(rho: f64) -> SystemSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        SystemSpec::Esn(EsnSpec::random(30, rho, 0.01, 0.0, &mut rng).unwrap())
    }

    #[test]
    fn linear_decay_has_exponent_minus_one() {
        let spec = SystemSpec::Ode(OdeSpec::new(OdeKind::LinearDecay { rate: 1.0 }, 0.01).unwrap());
        let cfg = LyapunovConfig {
            total_steps: 2000,
            transient: 100,
            ..LyapunovConfig::default()
        };
        let drive = DriveSequence::noiseless(vec![0.0; 2100]);
        let l = max_lyapunov(&spec, &drive, &StateVector::new(vec![1.0]), &cfg).unwrap();
        assert!((l + 1.0).abs() < 1e-3, "lambda = {l}");
    }

    #[test]
    fn contracting_esn_is_negative() {
        let spec = esn(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let drive = DriveSequence::noiseless(uniform_inputs(6000, 0.0, 1.0, &mut rng));
        let cfg = LyapunovConfig {
            total_steps: 5000,
            ..LyapunovConfig::default()
        };
        let init = spec.sample_initial(&mut rng);
        assert!(max_lyapunov(&spec, &drive, &init, &cfg).unwrap() < 0.0);
    }

    #[test]
    fn collapsed_separation_is_degenerate() {
        let spec = esn(0.0);
        let drive = DriveSequence::noiseless(vec![0.5; 50]);
        let cfg = LyapunovConfig {
            total_steps: 40,
            transient: 0,
            ..LyapunovConfig::default()
        };
        let err = max_lyapunov(&spec, &drive, &StateVector::zeros(30), &cfg).unwrap_err();
        assert!(matches!(err, ErcError::DegeneratePerturbation { .. }));
    }

    #[test]
    fn fixed_point_scan_has_no_spread() {
        let settings = ScanSettings {
            washout: 2000,
            samples: 50,
            stride: 3,
            lyapunov: LyapunovConfig {
                total_steps: 2000,
                ..LyapunovConfig::default()
            },
        };
        let drive = ScanDrive {
            input_range: None,
            noise: false,
            seed: 4,
        };
        let scan = bifurcation_scan(|r| Ok(esn(r)), &[0.5], &drive, &settings).unwrap();
        let s = &scan.points[0].samples;
        assert_eq!(s.len(), 50);
        let spread =
            s.iter().cloned().fold(f64::MIN, f64::max) - s.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-6);
    }

    #[test]
    fn scan_records_failures_and_rejects_bad_grids() {
        let drive = ScanDrive {
            input_range: None,
            noise: false,
            seed: 4,
        };
        let settings = ScanSettings {
            washout: 10,
            samples: 5,
            stride: 1,
            lyapunov: LyapunovConfig {
                total_steps: 100,
                transient: 10,
                ..LyapunovConfig::default()
            },
        };
        let family = |r: f64| {
            if r > 1.0 {
                Err(ErcError::invalid("boom"))
            } else {
                Ok(esn(r))
            }
        };
        let scan = bifurcation_scan(family, &[0.5, 2.0], &drive, &settings).unwrap();
        assert!(scan.points[1].error.is_some());
        assert!(scan.points[0].lambda.is_some());
        assert!(bifurcation_scan(|r| Ok(esn(r)), &[1.0, 1.0], &drive, &settings).is_err());
        assert!(bifurcation_scan(|r| Ok(esn(r)), &[], &drive, &settings).is_err());
    }
}
