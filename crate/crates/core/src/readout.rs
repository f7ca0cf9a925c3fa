//! Linear readouts with intercept and the error metrics used to score them.
//!
//! Columns are standardized before solving, so the ridge penalty
//! `lambda * n * |beta|^2` acts on standardized weights. The solve goes
//! through a Householder QR of the standardized design followed by an SVD of
//! the triangular factor; singular values below `max(n, p) * eps * s_max` are
//! truncated.

use nalgebra::{DMatrix, DVector, SVD};

use crate::ensemble::FeatureMatrix;
use crate::error::{ErcError, Result};

/// Ridge used when a caller does not choose one.
pub const DEFAULT_RIDGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel {
    /// One weight per feature column; dropped constant columns get 0.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub ridge: f64,
}

impl ReadoutModel {
    pub fn predict(&self, features: &FeatureMatrix) -> Result<Vec<f64>> {
        if features.ncols() != self.weights.len() {
            return Err(ErcError::DimensionMismatch {
                expected: self.weights.len(),
                actual: features.ncols(),
            });
        }
        let mut out = vec![self.bias; features.rows()];
        for (j, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(features.column(j)) {
                *o += w * x;
            }
        }
        Ok(out)
    }
}

/// Decomposition of one design matrix, reusable for many targets.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    rows: usize,
    ncols: usize,
    ridge: f64,
    kept: Vec<usize>,
    means: Vec<f64>,
    scales: Vec<f64>,
    /// Householder QR of the standardized design (kept columns only).
    qr: Option<nalgebra::linalg::QR<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    svd: Option<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    cutoff: f64,
}

impl LeastSquares {
    pub fn new(features: &FeatureMatrix, ridge: f64) -> Result<Self> {
        if !(ridge >= 0.0) || !ridge.is_finite() {
            return Err(ErcError::invalid(format!(
                "ridge must be >= 0, got {ridge}"
            )));
        }
        let n = features.rows();
        if n < 2 {
            return Err(ErcError::invalid("readout needs at least two rows"));
        }
        let mut kept = Vec::new();
        let mut means = Vec::new();
        let mut scales = Vec::new();
        for j in 0..features.ncols() {
            let col = features.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            let mag = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if sd > 1e-13 * mag && sd > 0.0 {
                kept.push(j);
                means.push(mean);
                scales.push(sd);
            }
        }
        let p = kept.len();
        let (qr, svd, cutoff) = if p == 0 {
            (None, None, 0.0)
        } else {
            let mut z = DMatrix::zeros(n, p);
            for (k, &j) in kept.iter().enumerate() {
                let (m, s) = (means[k], scales[k]);
                for (dst, x) in z.column_mut(k).iter_mut().zip(features.column(j)) {
                    *dst = (x - m) / s;
                }
            }
            let qr = z.qr();
            let r = qr.r();
            let svd = SVD::new(r, true, true);
            let s_max = svd.singular_values.max();
            let cutoff = n.max(p) as f64 * f64::EPSILON * s_max;
            (Some(qr), Some(svd), cutoff)
        };
        Ok(Self {
            rows: n,
            ncols: features.ncols(),
            ridge,
            kept,
            means,
            scales,
            qr,
            svd,
            cutoff,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of singular values above the truncation threshold.
    pub fn rank(&self) -> usize {
        self.svd.as_ref().map_or(0, |svd| {
            svd.singular_values
                .iter()
                .filter(|&&s| s > self.cutoff)
                .count()
        })
    }

    /// True when a column was constant or the standardized design is rank deficient.
    pub fn rank_deficient(&self) -> bool {
        self.kept.len() < self.ncols || self.rank() < self.kept.len()
    }

    /// Ratio of extreme retained singular values of the standardized design.
    pub fn condition(&self) -> f64 {
        self.svd.as_ref().map_or(f64::INFINITY, |svd| {
            let s = &svd.singular_values;
            let lo = s
                .iter()
                .copied()
                .filter(|&x| x > self.cutoff)
                .fold(f64::INFINITY, f64::min);
            s.max() / lo
        })
    }

    pub fn solve(&self, target: &[f64]) -> Result<ReadoutModel> {
        if target.len() != self.rows {
            return Err(ErcError::DimensionMismatch {
                expected: self.rows,
                actual: target.len(),
            });
        }
        let n = self.rows as f64;
        let y_mean = target.iter().sum::<f64>() / n;
        let mut weights = vec![0.0; self.ncols];
        let mut bias = y_mean;
        if let (Some(qr), Some(svd)) = (&self.qr, &self.svd) {
            let mut c = DVector::from_iterator(self.rows, target.iter().map(|y| y - y_mean));
            qr.q_tr_mul(&mut c);
            let p = self.kept.len().min(self.rows);
            let c = c.rows(0, p);
            let u = svd.u.as_ref().expect("U requested");
            let v_t = svd.v_t.as_ref().expect("V^T requested");
            let penalty = self.ridge * n;
            let mut coef = DVector::zeros(svd.singular_values.len());
            for (i, &s) in svd.singular_values.iter().enumerate() {
                if s > self.cutoff {
                    coef[i] = s / (s * s + penalty) * u.column(i).dot(&c);
                }
            }
            let beta = v_t.transpose() * coef;
            for (k, &j) in self.kept.iter().enumerate() {
                let w = beta[k] / self.scales[k];
                weights[j] = w;
                bias -= w * self.means[k];
            }
        }
        Ok(ReadoutModel {
            weights,
            bias,
            ridge: self.ridge,
        })
    }
}

/// Ridge least squares with an intercept.
pub fn fit(features: &FeatureMatrix, target: &[f64], ridge: f64) -> Result<ReadoutModel> {
    LeastSquares::new(features, ridge)?.solve(target)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub train_nmse: f64,
    pub test_nmse: Option<f64>,
    /// Squared correlation on the test rows when present, else on the training rows.
    pub squared_correlation: f64,
    pub condition: f64,
    pub rank: usize,
    pub rank_deficient: bool,
}

/// Fits on `train` and scores on both sets.
pub fn fit_and_score(
    train: (&FeatureMatrix, &[f64]),
    test: Option<(&FeatureMatrix, &[f64])>,
    ridge: f64,
) -> Result<(ReadoutModel, FitReport)> {
    let ls = LeastSquares::new(train.0, ridge)?;
    let model = ls.solve(train.1)?;
    let train_pred = model.predict(train.0)?;
    let train_nmse = nmse(train.1, &train_pred)?;
    let (test_nmse, squared_correlation) = match test {
        Some((x, y)) => {
            let pred = model.predict(x)?;
            (
                Some(nmse(y, &pred)?),
                squared_correlation_or_zero(y, &pred)?,
            )
        }
        None => (None, squared_correlation_or_zero(train.1, &train_pred)?),
    };
    Ok((
        model,
        FitReport {
            train_nmse,
            test_nmse,
            squared_correlation,
            condition: ls.condition(),
            rank: ls.rank(),
            rank_deficient: ls.rank_deficient(),
        },
    ))
}

/// `sum (y - yhat)^2 / sum (y - mean y)^2`.
pub fn nmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(ErcError::DimensionMismatch {
            expected: y.len(),
            actual: yhat.len(),
        });
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if !(var > 0.0) {
        return Err(ErcError::UndefinedMetric(
            "NMSE of a constant target".into(),
        ));
    }
    let err: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(err / var)
}

/// Squared Pearson correlation.
pub fn squared_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(ErcError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(ErcError::UndefinedMetric(
            "correlation with a constant series".into(),
        ));
    }
    Ok((sab * sab / (saa * sbb)).min(1.0))
}

/// Like [`squared_correlation`] but a constant prediction scores 0.
pub(crate) fn squared_correlation_or_zero(target: &[f64], pred: &[f64]) -> Result<f64> {
    match squared_correlation(target, pred) {
        Err(ErcError::UndefinedMetric(_)) if target.iter().any(|&t| t != target[0]) => Ok(0.0),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn exact_column_is_recovered() {
        let x = random(200, 1);
        let m = FeatureMatrix::from_unnamed(vec![x.clone()]).unwrap();
        let model = fit(&m, &x, 0.0).unwrap();
        assert_abs_diff_eq!(model.weights[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(model.bias, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            nmse(&x, &model.predict(&m).unwrap()).unwrap(),
            0.0,
            epsilon = 1e-20
        );
    }

    #[test]
    fn uncorrelated_target_gives_unit_nmse() {
        let n = 100;
        let x: Vec<f64> = (0..n).map(|t| (t % 2) as f64).collect();
        let y: Vec<f64> = (0..n).map(|t| ((t / 2) % 2) as f64).collect();
        let m = FeatureMatrix::from_unnamed(vec![x]).unwrap();
        let model = fit(&m, &y, 0.0).unwrap();
        assert!(model.weights[0].abs() < 1e-12);
        assert_abs_diff_eq!(
            nmse(&y, &model.predict(&m).unwrap()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn synthetic_linear_ground_truth() {
        let u = random(500, 2);
        let a: Vec<f64> = u[1..499].to_vec();
        let b: Vec<f64> = u[0..498].to_vec();
        let y: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 2.0 * p - q + 3.0).collect();
        let m = FeatureMatrix::from_unnamed(vec![a, b]).unwrap();
        let model = fit(&m, &y, 0.0).unwrap();
        assert_abs_diff_eq!(model.weights[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(model.weights[1], -1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(model.bias, 3.0, epsilon = 1e-8);
    }

    #[test]
    fn constant_column_is_flagged_not_fatal() {
        let x = random(50, 3);
        let m = FeatureMatrix::from_unnamed(vec![x.clone(), vec![2.0; 50]]).unwrap();
        let (model, report) = fit_and_score((&m, &x), None, 0.0).unwrap();
        assert!(report.rank_deficient);
        assert_eq!(model.weights[1], 0.0);
        assert_abs_diff_eq!(report.train_nmse, 0.0, epsilon = 1e-20);
    }

    #[test]
    fn duplicate_columns_are_rank_deficient() {
        let x = random(50, 4);
        let m = FeatureMatrix::from_unnamed(vec![x.clone(), x.clone()]).unwrap();
        let ls = LeastSquares::new(&m, 0.0).unwrap();
        assert_eq!(ls.rank(), 1);
        let model = ls.solve(&x).unwrap();
        assert_abs_diff_eq!(model.weights[0] + model.weights[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn ridge_increases_training_error() {
        let cols: Vec<Vec<f64>> = (0..5).map(|s| random(80, 10 + s)).collect();
        let y = random(80, 99);
        let m = FeatureMatrix::from_unnamed(cols).unwrap();
        let mut last = 0.0;
        for ridge in [0.0, 1e-6, 1e-3, 1e-1, 1.0, 10.0] {
            let (_, r) = fit_and_score((&m, &y), None, ridge).unwrap();
            assert!(r.train_nmse >= last - 1e-12);
            last = r.train_nmse;
        }
    }

    #[test]
    fn column_scaling_rescales_weight() {
        let a = random(60, 5);
        let b = random(60, 6);
        let y: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(p, q)| p + 0.3 * q + 0.1 * p * q)
            .collect();
        let m = FeatureMatrix::from_unnamed(vec![a.clone(), b.clone()]).unwrap();
        let scaled =
            FeatureMatrix::from_unnamed(vec![a.iter().map(|x| 7.0 * x).collect(), b]).unwrap();
        let m1 = fit(&m, &y, 0.0).unwrap();
        let m2 = fit(&scaled, &y, 0.0).unwrap();
        assert_abs_diff_eq!(m2.weights[0], m1.weights[0] / 7.0, epsilon = 1e-12);
        for (p, q) in m1
            .predict(&m)
            .unwrap()
            .iter()
            .zip(m2.predict(&scaled).unwrap())
        {
            assert_abs_diff_eq!(*p, q, epsilon = 1e-10);
        }
    }

    #[test]
    fn nmse_examples() {
        let y = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(nmse(&y, &y).unwrap(), 0.0);
        assert_eq!(nmse(&y, &[1.5; 4]).unwrap(), 1.0);
        assert_abs_diff_eq!(
            nmse(&y, &[0.0, 1.0, 2.0, 4.0]).unwrap(),
            0.2,
            epsilon = 1e-15
        );
        assert!(matches!(
            nmse(&[1.0; 3], &[1.0; 3]),
            Err(ErcError::UndefinedMetric(_))
        ));
    }

    #[test]
    fn squared_correlation_examples() {
        let a = [1.0, 2.0, 3.0];
        let b: Vec<f64> = a.iter().map(|x| 3.0 * x + 1.0).collect();
        assert_abs_diff_eq!(squared_correlation(&a, &b).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            squared_correlation(&a, &[1.0, 2.0, 4.0]).unwrap(),
            27.0 / 28.0,
            epsilon = 1e-12
        );
        assert!(squared_correlation(&random(100_000, 7), &random(100_000, 8)).unwrap() < 1e-3);
        assert!(squared_correlation(&a, &[2.0; 3]).is_err());
    }
}
