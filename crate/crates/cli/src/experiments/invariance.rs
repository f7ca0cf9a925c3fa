//! Time invariance of the averaged response: `time-invariance`.
//!
//! The drive repeats one random block at two places, separated by fresh
//! input. Two independent ensembles are compared over the second half of
//! each copy, once the preceding history has been forgotten.

use std::ops::Range;

use erc_core::ensemble::{time_invariance_check, TimeInvariance};

use super::{generate_drive, tables_to_artifacts, Artifact, Outcome};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{num, Stages, Table};

/// Deviations up to this many standard errors count as invariant.
pub const TOLERANCE_STANDARD_ERRORS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceRow {
    pub observable: String,
    pub result: TimeInvariance,
}

impl InvarianceRow {
    pub fn invariant(&self) -> bool {
        self.result.max_deviation <= TOLERANCE_STANDARD_ERRORS * self.result.standard_error()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceOutcome {
    pub window_a: Range<usize>,
    pub window_b: Range<usize>,
    pub rows: Vec<InvarianceRow>,
}

impl Outcome for InvarianceOutcome {
    fn artifacts(&self) -> Result<Vec<Artifact>> {
        let mut t = Table::new(
            "time_invariance.csv",
            &[
                "observable",
                "window_a_start",
                "window_b_start",
                "steps",
                "trials",
                "max_deviation",
                "spread",
                "standard_error",
                "invariant",
            ],
        );
        for r in &self.rows {
            t.push(vec![
                r.observable.clone(),
                self.window_a.start.to_string(),
                self.window_b.start.to_string(),
                self.window_a.len().to_string(),
                r.result.trials.to_string(),
                num(r.result.max_deviation),
                num(r.result.spread),
                num(r.result.standard_error()),
                r.invariant().to_string(),
            ]);
        }
        tables_to_artifacts(&[t])
    }
}

/// Drive of `washout + 2 (gap + block)` steps with the block copied twice,
/// and the compared windows.
pub fn block_drive(cfg: &ExperimentConfig) -> Result<(Vec<f64>, Range<usize>, Range<usize>)> {
    let (w, b, g) = (
        cfg.protocol.washout,
        cfg.invariance.block,
        cfg.invariance.gap,
    );
    let len = w + 2 * (g + b);
    let mut values = generate_drive(cfg.input(), len, cfg.seed)?.values;
    let a = w + g;
    let c = a + b + g;
    values.copy_within(a..a + b, c);
    Ok((values, a + b / 2..a + b, c + b / 2..c + b))
}

pub fn run(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<InvarianceOutcome> {
    let spec = cfg.system.build()?;
    let (values, window_a, window_b) = block_drive(cfg)?;
    let ens = cfg.ensemble_config();
    let observables = cfg.observables(spec.dim())?;
    if observables.is_empty() {
        return Err(CliError::Config(
            "time-invariance needs an observable".into(),
        ));
    }
    let mut rows = Vec::with_capacity(observables.len());
    for o in observables {
        let label = o.label(spec.name(), true).to_string();
        let result = stages.time(format!("{label} check"), || {
            time_invariance_check(
                &spec,
                &ens,
                o,
                &values,
                window_a.clone(),
                window_b.clone(),
                cfg.protocol.washout,
            )
        })?;
        rows.push(InvarianceRow {
            observable: label,
            result,
        });
    }
    Ok(InvarianceOutcome {
        window_a,
        window_b,
        rows,
    })
}
