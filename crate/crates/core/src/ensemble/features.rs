use nalgebra::DMatrix;
use std::collections::HashSet;
use std::fmt;
use std::ops::Range;

use crate::error::{ErcError, Result};

/// Where a feature column came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureLabel {
    pub system: String,
    pub component: usize,
    pub phi: String,
    /// False for single-trial baseline columns.
    pub averaged: bool,
}

impl fmt::Display for FeatureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.x{}.{}.{}",
            self.system,
            self.component,
            self.phi,
            if self.averaged { "avg" } else { "raw" }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    pub label: FeatureLabel,
    pub values: Vec<f64>,
}

/// Time x feature matrix with named columns, stored column-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    names: Vec<String>,
    rows: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    /// Validates equal lengths, unique names and finiteness.
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(ErcError::DimensionMismatch {
                expected: names.len(),
                actual: columns.len(),
            });
        }
        let mut m = FeatureMatrix {
            names: Vec::with_capacity(names.len()),
            rows: columns.first().map_or(0, Vec::len),
            values: Vec::with_capacity(columns.iter().map(Vec::len).sum()),
        };
        for (name, col) in names.into_iter().zip(columns) {
            m.push(name, &col)?;
        }
        Ok(m)
    }

    /// Unnamed columns `f0, f1, ...`.
    pub fn from_unnamed(columns: Vec<Vec<f64>>) -> Result<Self> {
        let names = (0..columns.len()).map(|j| format!("f{j}")).collect();
        Self::from_columns(names, columns)
    }

    pub fn push(&mut self, name: String, column: &[f64]) -> Result<()> {
        if self.names.is_empty() && self.values.is_empty() {
            self.rows = column.len();
        }
        if column.len() != self.rows {
            return Err(ErcError::DimensionMismatch {
                expected: self.rows,
                actual: column.len(),
            });
        }
        if self.names.contains(&name) {
            return Err(ErcError::DuplicateColumn(name));
        }
        if column.iter().any(|x| !x.is_finite()) {
            return Err(ErcError::PoisonedFeature { column: name });
        }
        self.names.push(name);
        self.values.extend_from_slice(column);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.rows..(j + 1) * self.rows]
    }

    /// Rows `range` of every column.
    pub fn slice_rows(&self, range: Range<usize>) -> FeatureMatrix {
        let rows = range.len();
        let mut values = Vec::with_capacity(rows * self.ncols());
        for j in 0..self.ncols() {
            values.extend_from_slice(&self.column(j)[range.clone()]);
        }
        FeatureMatrix {
            names: self.names.clone(),
            rows,
            values,
        }
    }

    /// Subset of columns, in the given order.
    pub fn select(&self, cols: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(self.rows * cols.len());
        for &j in cols {
            values.extend_from_slice(self.column(j));
        }
        FeatureMatrix {
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
            rows: self.rows,
            values,
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.rows, self.ncols(), &self.values)
    }
}

/// Stacks averaged columns, then optional single-trial columns.
pub fn assemble_features(
    averaged: Vec<FeatureSeries>,
    raw: Option<Vec<FeatureSeries>>,
) -> Result<FeatureMatrix> {
    let all: Vec<FeatureSeries> = averaged
        .into_iter()
        .chain(raw.into_iter().flatten())
        .collect();
    let mut seen = HashSet::new();
    for s in &all {
        let name = s.label.to_string();
        if !seen.insert(name.clone()) {
            return Err(ErcError::DuplicateColumn(name));
        }
    }
    let (names, columns) = all
        .into_iter()
        .map(|s| (s.label.to_string(), s.values))
        .unzip();
    FeatureMatrix::from_columns(names, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(phi: &str) -> FeatureLabel {
        FeatureLabel {
            system: "esn".into(),
            component: 0,
            phi: phi.into(),
            averaged: true,
        }
    }

    #[test]
    fn one_series_gives_one_column() {
        let m = assemble_features(
            vec![FeatureSeries {
                label: label("x"),
                values: vec![1.0, 2.0],
            }],
            None,
        )
        .unwrap();
        assert_eq!((m.rows(), m.ncols()), (2, 1));
        assert_eq!(m.names()[0], "esn.x0.x.avg");
    }

    #[test]
    fn even_powers_give_four_columns() {
        let series = ["x^2", "x^4", "x^6", "x^8"]
            .iter()
            .map(|p| FeatureSeries {
                label: label(p),
                values: vec![0.5; 10],
            })
            .collect();
        assert_eq!(assemble_features(series, None).unwrap().ncols(), 4);
    }

    #[test]
    fn duplicates_and_non_finite_are_rejected() {
        let s = FeatureSeries {
            label: label("x"),
            values: vec![1.0],
        };
        assert!(matches!(
            assemble_features(vec![s.clone(), s.clone()], None),
            Err(ErcError::DuplicateColumn(_))
        ));
        let bad = FeatureSeries {
            label: label("x"),
            values: vec![f64::NAN],
        };
        assert!(matches!(
            assemble_features(vec![bad], None),
            Err(ErcError::PoisonedFeature { .. })
        ));
    }

    #[test]
    fn raw_columns_are_distinct_from_averaged() {
        let avg = FeatureSeries {
            label: label("x"),
            values: vec![1.0, 2.0],
        };
        let mut raw = avg.clone();
        raw.label.averaged = false;
        let m = assemble_features(vec![avg], Some(vec![raw])).unwrap();
        assert_eq!(m.names()[1], "esn.x0.x.raw");
    }

    #[test]
    fn row_slices_keep_columns() {
        let m =
            FeatureMatrix::from_unnamed(vec![vec![0.0, 1.0, 2.0], vec![5.0, 6.0, 7.0]]).unwrap();
        let s = m.slice_rows(1..3);
        assert_eq!(s.column(1), &[6.0, 7.0]);
        assert_eq!(s.to_matrix()[(0, 0)], 1.0);
    }
}
