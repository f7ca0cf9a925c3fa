//! Memory function, memory capacity and (temporal) information processing capacity.
//!
//! Feature row `t` is paired with `input[t]`, the input it has just consumed.
//! Delay `tau` therefore targets `input[t + 1 - tau]`; `tau = 1` is the most
//! recent input.
//!
//! IPC and TIPC project centred, unit-norm targets onto an orthonormal basis
//! of the centred states. Targets are orthonormalized in enumeration order by
//! default, which makes the per-term capacities add up to at most the state
//! rank.

mod basis;

pub use basis::{enumerate_terms, legendre_all, Harmonic, PolynomialBasisTerm};

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::ensemble::FeatureMatrix;
use crate::error::{ErcError, Result};
use crate::readout::{squared_correlation_or_zero, LeastSquares, DEFAULT_RIDGE};

/// Relative singular-value cutoff used for the state rank.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Percentile of the surrogate distribution used as the per-term floor.
pub const SURROGATE_PERCENTILE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Evaluation {
    /// Fit on the first `train_fraction` of rows, score on the rest.
    Holdout {
        train_fraction: f64,
    },
    InSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryOptions {
    pub tau_max: usize,
    pub surrogates: usize,
    pub ridge: f64,
    pub evaluation: Evaluation,
}

impl Default for MemoryOptions {
    fn default() -> Self {
        Self {
            tau_max: 40,
            surrogates: 100,
            ridge: DEFAULT_RIDGE,
            evaluation: Evaluation::Holdout {
                train_fraction: 0.5,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryCurve {
    pub taus: Vec<usize>,
    /// `M_tau` after zeroing values at or below the surrogate floor.
    pub values: Vec<f64>,
    pub raw_values: Vec<f64>,
    /// Surrogate floor per delay.
    pub bias_floor: Vec<f64>,
    pub mc: f64,
    pub tau_max: usize,
}

impl MemoryCurve {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        row(&mut out, &["tau", "m_tau", "raw_m_tau", "bias_floor"])?;
        for i in 0..self.taus.len() {
            row(
                &mut out,
                &[
                    self.taus[i].to_string(),
                    fmt_f64(self.values[i]),
                    fmt_f64(self.raw_values[i]),
                    fmt_f64(self.bias_floor[i]),
                ],
            )?;
        }
        flush(out)
    }
}

/// Shared decomposition and split for scoring many targets on one feature matrix.
struct Scorer {
    ls: LeastSquares,
    eval_features: FeatureMatrix,
    train: std::ops::Range<usize>,
    eval: std::ops::Range<usize>,
}

impl Scorer {
    fn new(features: &FeatureMatrix, ridge: f64, evaluation: Evaluation) -> Result<Self> {
        let m = features.rows();
        let (train, eval) = match evaluation {
            Evaluation::InSample => (0..m, 0..m),
            Evaluation::Holdout { train_fraction } => {
                if !(train_fraction > 0.0 && train_fraction < 1.0) {
                    return Err(ErcError::invalid("train fraction must lie in (0, 1)"));
                }
                let cut = (m as f64 * train_fraction).round() as usize;
                if cut < 2 || m - cut < 2 {
                    return Err(ErcError::invalid("too few rows for a train/test split"));
                }
                (0..cut, cut..m)
            }
        };
        Ok(Self {
            ls: LeastSquares::new(&features.slice_rows(train.clone()), ridge)?,
            eval_features: features.slice_rows(eval.clone()),
            train,
            eval,
        })
    }

    /// Squared correlation between `target[eval]` and the prediction fitted on `target[train]`.
    fn score(&self, target: &[f64]) -> Result<f64> {
        let model = self.ls.solve(&target[self.train.clone()])?;
        let pred = model.predict(&self.eval_features)?;
        squared_correlation_or_zero(&target[self.eval.clone()], &pred)
    }
}

/// Circular shifts spread deterministically over `[m/4, 3m/4]`.
fn surrogate_shifts(m: usize, count: usize) -> Vec<usize> {
    (0..count)
        .map(|k| m / 4 + (k * (m / 2)) / count.max(1))
        .collect()
}

fn rotated(x: &[f64], shift: usize) -> Vec<f64> {
    let mut v = x.to_vec();
    v.rotate_left(shift % x.len().max(1));
    v
}

fn percentile(mut xs: Vec<f64>, q: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let rank = ((q * xs.len() as f64).ceil() as usize).clamp(1, xs.len());
    xs[rank - 1]
}

fn check_aligned(features: &FeatureMatrix, input: &[f64], max_delay: usize) -> Result<()> {
    if input.len() != features.rows() {
        return Err(ErcError::DimensionMismatch {
            expected: features.rows(),
            actual: input.len(),
        });
    }
    if max_delay == 0 {
        return Err(ErcError::invalid("delays start at 1"));
    }
    if features.rows() < max_delay + 4 {
        return Err(ErcError::invalid("too few rows for the requested delays"));
    }
    Ok(())
}

fn delayed(input: &[f64], tau: usize, start: usize) -> Vec<f64> {
    (start..input.len()).map(|t| input[t + 1 - tau]).collect()
}

/// `M_tau`, the squared correlation between the delayed input and its readout estimate.
pub fn memory_function(
    features: &FeatureMatrix,
    input: &[f64],
    tau: usize,
    opts: &MemoryOptions,
) -> Result<f64> {
    check_aligned(features, input, tau)?;
    let start = tau - 1;
    let scorer = Scorer::new(
        &features.slice_rows(start..features.rows()),
        opts.ridge,
        opts.evaluation,
    )?;
    scorer.score(&delayed(input, tau, start))
}

/// Memory function for `tau = 1..=tau_max` with a surrogate floor per delay.
/// All delays use rows from `tau_max - 1` onward.
pub fn memory_capacity(
    features: &FeatureMatrix,
    input: &[f64],
    opts: &MemoryOptions,
) -> Result<MemoryCurve> {
    check_aligned(features, input, opts.tau_max)?;
    let start = opts.tau_max - 1;
    let scorer = Scorer::new(
        &features.slice_rows(start..features.rows()),
        opts.ridge,
        opts.evaluation,
    )?;
    let m = features.rows() - start;
    let shifts = surrogate_shifts(m, opts.surrogates);
    let mut curve = MemoryCurve {
        taus: (1..=opts.tau_max).collect(),
        values: Vec::new(),
        raw_values: Vec::new(),
        bias_floor: Vec::new(),
        mc: 0.0,
        tau_max: opts.tau_max,
    };
    for tau in 1..=opts.tau_max {
        let target = delayed(input, tau, start);
        let raw = scorer.score(&target)?;
        let floor = percentile(
            shifts
                .iter()
                .map(|&s| scorer.score(&rotated(&target, s)))
                .collect::<Result<Vec<_>>>()?,
            SURROGATE_PERCENTILE,
        );
        let value = if raw > floor { raw } else { 0.0 };
        curve.raw_values.push(raw);
        curve.bias_floor.push(floor);
        curve.values.push(value);
        curve.mc += value;
    }
    Ok(curve)
}

/// Orthonormal basis of the centred feature columns.
#[derive(Debug, Clone)]
pub struct OrthonormalStates {
    /// `rows x rank`, orthonormal columns.
    pub basis: DMatrix<f64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
}

/// Centres each column and scales it to unit norm, then keeps the left singular
/// vectors whose singular values exceed `RANK_TOLERANCE * s_max`.
pub fn orthonormalize_states(features: &FeatureMatrix) -> Result<OrthonormalStates> {
    let n = features.rows();
    if n < 2 {
        return Err(ErcError::invalid("need at least two rows"));
    }
    let mut cols = Vec::new();
    for j in 0..features.ncols() {
        let c = features.column(j);
        let mean = c.iter().sum::<f64>() / n as f64;
        let centred: Vec<f64> = c.iter().map(|x| x - mean).collect();
        let norm = centred.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mag = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if norm > 0.0 && norm > 1e-13 * mag * (n as f64).sqrt() {
            cols.push(centred.into_iter().map(|x| x / norm).collect::<Vec<_>>());
        }
    }
    if cols.is_empty() {
        return Ok(OrthonormalStates {
            basis: DMatrix::zeros(n, 0),
            rank: 0,
            singular_values: Vec::new(),
            threshold: 0.0,
        });
    }
    let m = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let svd = SVD::new(m, true, false);
    let s = svd.singular_values.as_slice().to_vec();
    let threshold = RANK_TOLERANCE * s.iter().copied().fold(0.0, f64::max);
    let u = svd.u.expect("U requested");
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > threshold).collect();
    let basis = DMatrix::from_fn(n, keep.len(), |i, j| u[(i, keep[j])]);
    Ok(OrthonormalStates {
        rank: keep.len(),
        basis,
        singular_values: s,
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputDistribution {
    Uniform { lo: f64, hi: f64 },
    Binary,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityOptions {
    pub max_degree: u32,
    pub max_delay: usize,
    /// Optional per-degree delay limits (entry `d - 1` for degree `d`).
    pub max_delay_by_degree: Vec<usize>,
    pub term_budget: usize,
    pub surrogates: usize,
    pub orthonormalize_targets: bool,
    pub distribution: InputDistribution,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self {
            max_degree: 3,
            max_delay: 40,
            max_delay_by_degree: Vec::new(),
            term_budget: 2000,
            surrogates: 100,
            orthonormalize_targets: true,
            distribution: InputDistribution::Uniform { lo: 0.0, hi: 1.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermCapacity {
    pub term: PolynomialBasisTerm,
    /// Zero when `raw` does not exceed `threshold`.
    pub capacity: f64,
    pub raw: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub terms: Vec<TermCapacity>,
    /// Index `d` holds the degree-`d` sum.
    pub ipc_by_degree: Vec<f64>,
    pub tipc_by_degree: Vec<f64>,
    pub total: f64,
    pub rank: usize,
    pub rank_threshold: f64,
    pub rows: usize,
}

impl CapacityReport {
    pub fn ipc_total(&self) -> f64 {
        self.ipc_by_degree.iter().sum()
    }

    pub fn tipc_total(&self) -> f64 {
        self.tipc_by_degree.iter().sum()
    }

    /// Total capacity does not exceed the state rank by more than `tol`.
    pub fn within_rank_bound(&self, tol: f64) -> bool {
        self.total <= self.rank as f64 + tol
    }

    pub fn capacity_of(&self, term: &PolynomialBasisTerm) -> Option<f64> {
        self.terms
            .iter()
            .find(|t| &t.term == term)
            .map(|t| t.capacity)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        row(
            &mut out,
            &[
                "term",
                "degree",
                "delays",
                "degrees",
                "harmonic",
                "capacity",
                "raw",
                "threshold",
            ],
        )?;
        for t in &self.terms {
            row(
                &mut out,
                &[
                    t.term.to_string(),
                    t.term.total_degree().to_string(),
                    t.term.delays_string(),
                    t.term.degrees_string(),
                    t.term.harmonic_string(),
                    fmt_f64(t.capacity),
                    fmt_f64(t.raw),
                    fmt_f64(t.threshold),
                ],
            )?;
        }
        flush(out)
    }

    /// One row per degree: `degree, ipc, tipc`.
    pub fn write_degree_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        row(&mut out, &["degree", "ipc", "tipc", "rank"])?;
        for d in 0..self.ipc_by_degree.len().max(self.tipc_by_degree.len()) {
            row(
                &mut out,
                &[
                    d.to_string(),
                    fmt_f64(self.ipc_by_degree.get(d).copied().unwrap_or(0.0)),
                    fmt_f64(self.tipc_by_degree.get(d).copied().unwrap_or(0.0)),
                    self.rank.to_string(),
                ],
            )?;
        }
        flush(out)
    }
}

/// Information processing capacity over Legendre products of the delayed input.
pub fn ipc(
    features: &FeatureMatrix,
    input: &[f64],
    opts: &CapacityOptions,
) -> Result<CapacityReport> {
    capacity_report(features, input, None, opts)
}

/// IPC plus temporal terms built from `time` (one value per feature row) with harmonics
/// `1..=max_harmonic` of `period`.
pub fn tipc(
    features: &FeatureMatrix,
    input: &[f64],
    time: &[f64],
    period: f64,
    max_harmonic: u32,
    opts: &CapacityOptions,
) -> Result<CapacityReport> {
    if time.len() != features.rows() {
        return Err(ErcError::DimensionMismatch {
            expected: features.rows(),
            actual: time.len(),
        });
    }
    if !(period > 0.0) {
        return Err(ErcError::invalid("time period must be > 0"));
    }
    capacity_report(features, input, Some((time, period, max_harmonic)), opts)
}

fn scale_input(input: &[f64], dist: InputDistribution) -> Result<Vec<f64>> {
    match dist {
        InputDistribution::Uniform { lo, hi } if hi > lo => Ok(input
            .iter()
            .map(|u| 2.0 * (u - lo) / (hi - lo) - 1.0)
            .collect()),
        InputDistribution::Uniform { .. } => Err(ErcError::invalid("empty input range")),
        other => Err(ErcError::UnsupportedDistribution(format!(
            "{other:?}; Legendre bases need uniform input"
        ))),
    }
}

fn capacity_report(
    features: &FeatureMatrix,
    input: &[f64],
    temporal: Option<(&[f64], f64, u32)>,
    opts: &CapacityOptions,
) -> Result<CapacityReport> {
    let max_delay = opts
        .max_delay_by_degree
        .iter()
        .copied()
        .chain(std::iter::once(opts.max_delay))
        .max()
        .unwrap_or(1)
        .max(1);
    check_aligned(features, input, max_delay)?;
    let x = scale_input(input, opts.distribution)?;
    let start = max_delay - 1;
    let states = orthonormalize_states(&features.slice_rows(start..features.rows()))?;
    let m = features.rows() - start;

    let max_harmonic = temporal.map_or(0, |t| t.2);
    let terms = enumerate_terms(
        opts.max_degree,
        opts.max_delay,
        &opts.max_delay_by_degree,
        max_harmonic,
        opts.term_budget,
    );
    let legendre: Vec<Vec<f64>> = x
        .iter()
        .map(|&v| legendre_all(v, opts.max_degree))
        .collect();

    let shifts = surrogate_shifts(m, opts.surrogates);
    let mut accepted: Vec<DVector<f64>> = Vec::new();
    let mut results = Vec::with_capacity(terms.len());
    let mut ipc_by_degree = vec![0.0; opts.max_degree as usize + 1];
    let mut tipc_by_degree = vec![0.0; opts.max_degree as usize + 1];

    for term in terms {
        let mut z = DVector::from_fn(m, |r, _| {
            let t = r + start;
            let mut v = 1.0;
            for &(delay, deg) in &term.factors {
                v *= legendre[t + 1 - delay][deg as usize];
            }
            if let (Some(h), Some((time, period, _))) = (term.harmonic, temporal) {
                let arg = std::f64::consts::TAU * f64::from(h.k) * time[t] / period;
                v *= if h.sine { arg.sin() } else { arg.cos() };
            }
            v
        });
        let mean = z.mean();
        z.add_scalar_mut(-mean);
        let norm0 = z.norm();
        if opts.orthonormalize_targets {
            // Two passes of modified Gram-Schmidt.
            for _ in 0..2 {
                for e in &accepted {
                    let c = e.dot(&z);
                    z.axpy(-c, e, 1.0);
                }
            }
        }
        let norm = z.norm();
        let (raw, threshold) = if norm0 > 0.0 && norm > 1e-8 * norm0 {
            z /= norm;
            let raw = projected_energy(&states.basis, &z);
            let surrogate = surrogate_energies(&states.basis, &z, &shifts);
            if opts.orthonormalize_targets {
                accepted.push(z);
            }
            (raw, percentile(surrogate, SURROGATE_PERCENTILE))
        } else {
            (0.0, 0.0)
        };
        let capacity = if raw > threshold { raw } else { 0.0 };
        let d = term.total_degree() as usize;
        if term.is_temporal() {
            tipc_by_degree[d] += capacity;
        } else {
            ipc_by_degree[d] += capacity;
        }
        results.push(TermCapacity {
            term,
            capacity,
            raw,
            threshold,
        });
    }
    let total = ipc_by_degree.iter().sum::<f64>() + tipc_by_degree.iter().sum::<f64>();
    Ok(CapacityReport {
        terms: results,
        ipc_by_degree,
        tipc_by_degree,
        total,
        rank: states.rank,
        rank_threshold: states.threshold,
        rows: m,
    })
}

fn projected_energy(q: &DMatrix<f64>, z: &DVector<f64>) -> f64 {
    if q.ncols() == 0 {
        return 0.0;
    }
    (q.tr_mul(z)).norm_squared()
}

fn surrogate_energies(q: &DMatrix<f64>, z: &DVector<f64>, shifts: &[usize]) -> Vec<f64> {
    if shifts.is_empty() || q.ncols() == 0 {
        return Vec::new();
    }
    let m = z.len();
    let s = DMatrix::from_fn(m, shifts.len(), |i, k| z[(i + shifts[k]) % m]);
    let p = q.tr_mul(&s);
    p.column_iter().map(|c| c.norm_squared()).collect()
}

/// 17 significant digits, round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn row<W: Write, S: AsRef<[u8]>>(out: &mut csv::Writer<W>, fields: &[S]) -> Result<()> {
    out.write_record(fields)
        .map_err(|e| ErcError::Io(e.to_string()))
}

fn flush<W: Write>(mut out: csv::Writer<W>) -> Result<()> {
    out.flush().map_err(|e| ErcError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
    }

    fn lagged(u: &[f64], tau: usize) -> Vec<f64> {
        (0..u.len())
            .map(|t| if t + 1 >= tau { u[t + 1 - tau] } else { 0.0 })
            .collect()
    }

    #[test]
    fn exact_delay_column_has_unit_memory() {
        let u = uniform(2000, 1);
        let f = FeatureMatrix::from_unnamed(vec![lagged(&u, 2)]).unwrap();
        let m2 = memory_function(&f, &u, 2, &MemoryOptions::default()).unwrap();
        assert!((m2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unrelated_delay_falls_below_floor() {
        let u = uniform(4000, 2);
        let f = FeatureMatrix::from_unnamed(vec![lagged(&u, 2)]).unwrap();
        let opts = MemoryOptions {
            tau_max: 3,
            ..MemoryOptions::default()
        };
        let curve = memory_capacity(&f, &u, &opts).unwrap();
        assert_eq!(curve.values[0], 0.0);
        assert!(curve.raw_values[0] <= curve.bias_floor[0]);
        assert!((curve.values[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn single_lag_feature_gives_unit_mc() {
        let u = uniform(4000, 3);
        let f = FeatureMatrix::from_unnamed(vec![lagged(&u, 1)]).unwrap();
        let curve = memory_capacity(&f, &u, &MemoryOptions::default()).unwrap();
        assert!((curve.mc - 1.0).abs() < 0.01, "mc = {}", curve.mc);
    }

    #[test]
    fn pure_noise_has_no_memory() {
        let u = uniform(4000, 4);
        let cols = (0..10).map(|s| uniform(4000, 100 + s)).collect();
        let f = FeatureMatrix::from_unnamed(cols).unwrap();
        let curve = memory_capacity(&f, &u, &MemoryOptions::default()).unwrap();
        assert!(curve.mc < 0.05, "mc = {}", curve.mc);
    }

    #[test]
    fn rank_of_duplicates_and_random_columns() {
        let a = uniform(100, 5);
        let dup = FeatureMatrix::from_unnamed(vec![a.clone(), a.iter().map(|x| 2.0 * x).collect()])
            .unwrap();
        assert_eq!(orthonormalize_states(&dup).unwrap().rank, 1);
        let cols = (0..8).map(|s| uniform(500, 10 + s)).collect();
        let f = FeatureMatrix::from_unnamed(cols).unwrap();
        let q = orthonormalize_states(&f).unwrap();
        assert_eq!(q.rank, 8);
        let gram = q.basis.tr_mul(&q.basis);
        assert!((gram - DMatrix::identity(8, 8)).abs().max() < 1e-12);
    }

    #[test]
    fn linear_feature_has_unit_first_order_ipc() {
        let u = uniform(5000, 6);
        let f = FeatureMatrix::from_unnamed(vec![lagged(&u, 1)]).unwrap();
        let opts = CapacityOptions {
            max_degree: 3,
            max_delay: 5,
            ..CapacityOptions::default()
        };
        let r = ipc(&f, &u, &opts).unwrap();
        assert!((r.ipc_by_degree[1] - 1.0).abs() < 1e-9);
        assert_eq!(r.ipc_by_degree[2], 0.0);
        assert_eq!(r.ipc_by_degree[3], 0.0);
        assert!(r.within_rank_bound(1e-6));
    }

    #[test]
    fn legendre_feature_matches_its_term() {
        let u = uniform(5000, 7);
        let p2: Vec<f64> = lagged(&u, 1)
            .iter()
            .map(|v| legendre_all(2.0 * v - 1.0, 2)[2])
            .collect();
        let f = FeatureMatrix::from_unnamed(vec![p2]).unwrap();
        let opts = CapacityOptions {
            max_degree: 2,
            max_delay: 3,
            ..CapacityOptions::default()
        };
        let term = PolynomialBasisTerm {
            factors: vec![(1, 2)],
            harmonic: None,
        };
        let raw = ipc(
            &f,
            &u,
            &CapacityOptions {
                orthonormalize_targets: false,
                ..opts.clone()
            },
        )
        .unwrap();
        assert!((raw.capacity_of(&term).unwrap() - 1.0).abs() < 1e-9);
        // Orthonormalizing against the earlier degree-1 terms removes sampling overlap only.
        let r = ipc(&f, &u, &opts).unwrap();
        assert!((r.capacity_of(&term).unwrap() - 1.0).abs() < 5e-3);
        assert!(r.within_rank_bound(1e-6));
    }

    #[test]
    fn non_uniform_input_is_unsupported() {
        let u = uniform(100, 8);
        let f = FeatureMatrix::from_unnamed(vec![u.clone()]).unwrap();
        let opts = CapacityOptions {
            distribution: InputDistribution::Normal,
            max_delay: 2,
            ..CapacityOptions::default()
        };
        assert!(matches!(
            ipc(&f, &u, &opts),
            Err(ErcError::UnsupportedDistribution(_))
        ));
    }

    #[test]
    fn percentile_is_nearest_rank() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(xs.clone(), 0.99), 99.0);
        assert_eq!(percentile(xs, 1.0), 100.0);
    }

    #[test]
    fn csv_uses_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
