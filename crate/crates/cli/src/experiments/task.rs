//! Readout benchmarks on each reservoir variant: `task-run` and `narma-sweep`.

use erc_core::dynamics::SystemSpec;
use erc_core::ensemble::FeatureMatrix;
use erc_core::readout::{fit_and_score, LeastSquares};
use erc_core::tasks::{
    crc_target, hamming_decode_target, hamming_encode_target, narma10_target, score_bits,
    NARMA_WARMUP,
};

use super::{generate_drive, tables_to_artifacts, variant_features, Artifact, Drive, Outcome};
use crate::config::{ExperimentConfig, TaskKind, Variant};
use crate::error::{CliError, Result};
use crate::output::{num, Stages, Table};

/// Per-row targets over the retained window, one vector per output.
#[derive(Debug, Clone, PartialEq)]
enum Targets {
    Real(Vec<f64>),
    Bits(Vec<Vec<u8>>),
}

/// Targets for rows `washout..washout + rows`; row `r` reads drive step `washout + r`.
fn task_targets(cfg: &ExperimentConfig, drive: &Drive, rows: usize) -> Result<Targets> {
    let washout = cfg.protocol.washout;
    let bits = || {
        drive
            .bits
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("{:?} needs a binary input", cfg.task.kind)))
    };
    let window = |offset: usize| -> Result<usize> {
        washout.checked_sub(offset).ok_or_else(|| {
            CliError::Config(format!(
                "protocol.washout must be >= {offset} for this task"
            ))
        })
    };
    let transpose = |words: Vec<Vec<u8>>| -> Vec<Vec<u8>> {
        let width = words.first().map_or(0, Vec::len);
        (0..width)
            .map(|b| words.iter().map(|w| w[b]).collect())
            .collect()
    };
    Ok(match cfg.task.kind {
        TaskKind::Narma10 => {
            if washout < NARMA_WARMUP {
                return Err(CliError::Config(format!(
                    "protocol.washout must be >= {NARMA_WARMUP} for NARMA10"
                )));
            }
            let y = narma10_target(&drive.values, cfg.task.delta, cfg.task.mu)?;
            Targets::Real(y[washout..washout + rows].to_vec())
        }
        TaskKind::Crc => {
            let s = window(4)?;
            let out = crc_target(bits()?)?;
            Targets::Bits(transpose(
                out[s..s + rows].iter().map(|w| w.to_vec()).collect(),
            ))
        }
        TaskKind::HammingEncode => {
            let s = window(3)?;
            let out = hamming_encode_target(bits()?)?;
            Targets::Bits(transpose(
                out[s..s + rows].iter().map(|w| w.to_vec()).collect(),
            ))
        }
        TaskKind::HammingDecode => {
            let s = window(6)?;
            let out = hamming_decode_target(bits()?, cfg.task.decoder)?;
            Targets::Bits(transpose(
                out[s..s + rows].iter().map(|w| w.to_vec()).collect(),
            ))
        }
    })
}

/// Score of one variant on the test rows.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantScore {
    pub variant: Variant,
    pub features: usize,
    pub rank: usize,
    /// NMSE for real targets.
    pub train_nmse: Option<f64>,
    pub test_nmse: Option<f64>,
    /// Bit accuracy per output and overall for binary targets.
    pub per_bit: Vec<f64>,
    pub accuracy: Option<f64>,
    pub excluded: usize,
}

fn score_variant(
    cfg: &ExperimentConfig,
    variant: Variant,
    features: &FeatureMatrix,
    targets: &Targets,
    excluded: usize,
) -> Result<VariantScore> {
    let train = cfg.protocol.train;
    let rows = features.rows();
    let (xtr, xte) = (
        features.slice_rows(0..train),
        features.slice_rows(train..rows),
    );
    match targets {
        Targets::Real(y) => {
            let (_, report) = fit_and_score(
                (&xtr, &y[..train]),
                Some((&xte, &y[train..])),
                cfg.task.ridge,
            )?;
            Ok(VariantScore {
                variant,
                features: features.ncols(),
                rank: report.rank,
                train_nmse: Some(report.train_nmse),
                test_nmse: report.test_nmse,
                per_bit: Vec::new(),
                accuracy: None,
                excluded,
            })
        }
        Targets::Bits(bits) => {
            let ls = LeastSquares::new(&xtr, cfg.task.ridge)?;
            let mut predictions = Vec::with_capacity(bits.len());
            let mut test_bits = Vec::with_capacity(bits.len());
            for b in bits {
                let y: Vec<f64> = b[..train].iter().map(|&v| f64::from(v)).collect();
                predictions.push(ls.solve(&y)?.predict(&xte)?);
                test_bits.push(b[train..].to_vec());
            }
            let acc = score_bits(&predictions, &test_bits, cfg.task.threshold)?;
            Ok(VariantScore {
                variant,
                features: features.ncols(),
                rank: ls.rank(),
                train_nmse: None,
                test_nmse: None,
                per_bit: acc.per_bit,
                accuracy: Some(acc.overall),
                excluded,
            })
        }
    }
}

fn run_variants(
    cfg: &ExperimentConfig,
    spec: &SystemSpec,
    drive: &Drive,
    stages: &mut Stages,
    label: &str,
) -> Result<Vec<VariantScore>> {
    let rows = cfg.protocol.train + cfg.protocol.test;
    let targets = task_targets(cfg, drive, rows)?;
    let mut scores = Vec::with_capacity(cfg.task.variants.len());
    for &v in &cfg.task.variants {
        let vf = stages.time(format!("{label}{} features", v.name()), || {
            variant_features(cfg, v, spec, &drive.values)
        })?;
        let excluded = vf.excluded();
        let score = stages.time(format!("{label}{} readout", v.name()), || {
            score_variant(cfg, v, &vf.features, &targets, excluded)
        })?;
        scores.push(score);
    }
    Ok(scores)
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub kind: TaskKind,
    pub scores: Vec<VariantScore>,
}

impl TaskOutcome {
    pub fn score(&self, variant: Variant) -> Option<&VariantScore> {
        self.scores.iter().find(|s| s.variant == variant)
    }
}

impl Outcome for TaskOutcome {
    fn artifacts(&self) -> Result<Vec<Artifact>> {
        let mut t = Table::new(
            "task_result.csv",
            &[
                "variant",
                "features",
                "rank",
                "train_nmse",
                "test_nmse",
                "accuracy",
                "per_bit",
                "excluded_trials",
            ],
        );
        for s in &self.scores {
            t.push(vec![
                s.variant.name().into(),
                s.features.to_string(),
                s.rank.to_string(),
                opt(s.train_nmse),
                opt(s.test_nmse),
                opt(s.accuracy),
                s.per_bit
                    .iter()
                    .map(|&b| num(b))
                    .collect::<Vec<_>>()
                    .join(";"),
                s.excluded.to_string(),
            ]);
        }
        tables_to_artifacts(&[t])
    }
}

/// Fits and scores every configured variant on one task.
pub fn run(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<TaskOutcome> {
    let spec = cfg.system.build()?;
    let drive = generate_drive(cfg.input(), cfg.protocol.total_len(), cfg.seed)?;
    Ok(TaskOutcome {
        kind: cfg.task.kind,
        scores: run_variants(cfg, &spec, &drive, stages, "")?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub scores: Vec<VariantScore>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NarmaSweepOutcome {
    pub parameter: String,
    pub points: Vec<SweepPoint>,
}

impl NarmaSweepOutcome {
    /// Test NMSE of `variant` at each scanned value.
    pub fn test_nmse(&self, variant: Variant) -> Vec<(f64, Option<f64>)> {
        self.points
            .iter()
            .map(|p| {
                let s = p.scores.iter().find(|s| s.variant == variant);
                (p.value, s.and_then(|s| s.test_nmse))
            })
            .collect()
    }
}

impl Outcome for NarmaSweepOutcome {
    fn artifacts(&self) -> Result<Vec<Artifact>> {
        let mut t = Table::new(
            "narma_sweep.csv",
            &[
                "parameter",
                "value",
                "variant",
                "train_nmse",
                "test_nmse",
                "rank",
            ],
        );
        for p in &self.points {
            for s in &p.scores {
                t.push(vec![
                    self.parameter.clone(),
                    num(p.value),
                    s.variant.name().into(),
                    opt(s.train_nmse),
                    opt(s.test_nmse),
                    s.rank.to_string(),
                ]);
            }
        }
        tables_to_artifacts(&[t])
    }
}

/// NARMA10 NMSE of each variant across the scanned parameter.
pub fn narma_sweep(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<NarmaSweepOutcome> {
    if cfg.task.kind != TaskKind::Narma10 {
        return Err(CliError::Config(
            "narma-sweep needs task.kind = \"narma10\"".into(),
        ));
    }
    let parameter = cfg.scan.parameter.clone().unwrap_or_default();
    let drive = generate_drive(cfg.input(), cfg.protocol.total_len(), cfg.seed)?;
    let mut points = Vec::with_capacity(cfg.scan.values.len());
    for &value in &cfg.scan.values {
        let point = cfg.with_parameter(&parameter, value)?;
        let spec = point.system.build()?;
        let label = format!("{parameter}={value} ");
        points.push(SweepPoint {
            value,
            scores: run_variants(&point, &spec, &drive, stages, &label)?,
        });
    }
    Ok(NarmaSweepOutcome { parameter, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use erc_core::readout::nmse;

    fn mean_predictor_nmse(y: &[f64], train: usize) -> f64 {
        let mean = y[..train].iter().sum::<f64>() / train as f64;
        nmse(&y[train..], &vec![mean; y.len() - train]).unwrap()
    }

    fn cfg(task: &str, input: &str, extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(&format!(
            "experiment = \"task-run\"\n[system]\nmodel = \"esn\"\nnodes = 20\nnoise_gain = 0.01\n[ensemble]\ntrials = 4\n[protocol]\nwashout = 200\ntrain = 1500\ntest = 500\n{input}\n[task]\nkind = \"{task}\"\n{extra}\n"
        ))
        .unwrap()
    }

    const BINARY: &str = "[protocol.input]\ndistribution = \"binary\"\nlo = 0.0\nhi = 1.0";

    #[test]
    fn targets_align_with_drive_steps() {
        let c = cfg("crc", BINARY, "");
        let drive = generate_drive(c.input(), c.protocol.total_len(), c.seed).unwrap();
        let Targets::Bits(bits) = task_targets(&c, &drive, 10).unwrap() else {
            panic!()
        };
        let u = drive.bits.unwrap();
        let t = c.protocol.washout;
        assert_eq!(bits[0][0], u[t] ^ u[t - 2]);
        assert_eq!(bits[2][3], u[t + 2] ^ u[t - 1]);
    }

    #[test]
    fn binary_tasks_need_binary_input() {
        let c = cfg("crc", "", "");
        assert!(matches!(
            run(&c, &mut Stages::default()),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn narma_beats_mean_predictor() {
        let c = cfg("narma10", "", "variants = [\"standard\"]");
        let out = run(&c, &mut Stages::default()).unwrap();
        let s = out.score(Variant::Standard).unwrap();
        assert!(s.test_nmse.unwrap() < 1.0, "{s:?}");
        let drive = generate_drive(c.input(), c.protocol.total_len(), c.seed).unwrap();
        let y = narma10_target(&drive.values, 0.2, 0.0).unwrap();
        assert!((mean_predictor_nmse(&y[200..2200], 1500) - 1.0).abs() < 0.2);
    }

    #[test]
    fn bit_tasks_report_every_output() {
        let c = cfg(
            "hamming_encode",
            BINARY,
            "variants = [\"standard\", \"erc\"]",
        );
        let out = run(&c, &mut Stages::default()).unwrap();
        for s in &out.scores {
            assert_eq!(s.per_bit.len(), 7);
            assert!(s.accuracy.unwrap() > 0.5);
        }
        let csv = String::from_utf8(out.artifacts().unwrap()[0].bytes.clone()).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }
}
