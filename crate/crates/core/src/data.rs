use std::collections::HashSet;

use nalgebra::{DMatrix, RowDVector};

use crate::error::{Error, Result};

/// Label given to every row when no class column is supplied.
pub const DEFAULT_CLASS: &str = "all";

/// An `n x p` numeric table with feature names, per-row class labels and
/// row identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    values: DMatrix<f64>,
    feature_names: Vec<String>,
    labels: Vec<String>,
    row_ids: Vec<String>,
}

impl DataSet {
    /// Validates shape, finiteness and feature-name uniqueness. Missing
    /// labels default to a single class, missing ids to `1..=n`.
    pub fn new(
        values: DMatrix<f64>,
        feature_names: Vec<String>,
        labels: Option<Vec<String>>,
        row_ids: Option<Vec<String>>,
    ) -> Result<Self> {
        let (n, p) = values.shape();
        if n == 0 {
            return Err(Error::InvalidData("data set has no rows".into()));
        }
        if p < 3 {
            return Err(Error::TooFewFeatures(p));
        }
        if feature_names.len() != p {
            return Err(Error::DimensionMismatch { expected: p, actual: feature_names.len() });
        }
        let mut seen = HashSet::new();
        if let Some(dup) = feature_names.iter().find(|name| !seen.insert(name.as_str())) {
            return Err(Error::InvalidData(format!("duplicate feature name '{dup}'")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            // column-major storage
            let (row, column) = (pos % n, pos / n);
            return Err(Error::InvalidData(format!("non-finite value at row {row}, column {column}")));
        }
        let labels = labels.unwrap_or_else(|| vec![DEFAULT_CLASS.to_string(); n]);
        let row_ids = row_ids.unwrap_or_else(|| (1..=n).map(|i| i.to_string()).collect());
        if labels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: labels.len() });
        }
        if row_ids.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: row_ids.len() });
        }
        Ok(DataSet { values, feature_names, labels, row_ids })
    }

    /// Convenience constructor from row vectors with generated feature names
    /// `x1..xp`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch { expected: p, actual: bad.len() });
        }
        let values = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        DataSet::new(values, names, None, None)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> RowDVector<f64> {
        self.values.row(i).into_owned()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    /// Distinct class labels in order of first appearance.
    pub fn classes(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.labels.iter().filter(|l| seen.insert(l.as_str())).cloned().collect()
    }

    /// Replaces the numeric values, keeping names, labels and ids.
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        DataSet::new(values, self.feature_names.clone(), Some(self.labels.clone()), Some(self.row_ids.clone()))
    }

    pub fn with_labels(self, labels: Vec<String>) -> Result<Self> {
        DataSet::new(self.values, self.feature_names, Some(labels), Some(self.row_ids))
    }

    /// Drops the named feature columns.
    pub fn drop_columns(&self, names: &[String]) -> Result<Self> {
        for name in names {
            if !self.feature_names.contains(name) {
                return Err(Error::MissingColumn(name.clone()));
            }
        }
        let keep: Vec<usize> = (0..self.p()).filter(|&j| !names.contains(&self.feature_names[j])).collect();
        let values = DMatrix::from_fn(self.n(), keep.len(), |i, k| self.values[(i, keep[k])]);
        let feature_names = keep.iter().map(|&j| self.feature_names[j].clone()).collect();
        DataSet::new(values, feature_names, Some(self.labels.clone()), Some(self.row_ids.clone()))
    }

    /// Reorders feature columns so that new column `k` is old column `order[k]`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), actual: order.len() });
        }
        let values = DMatrix::from_fn(self.n(), self.p(), |i, k| self.values[(i, order[k])]);
        let feature_names = order.iter().map(|&j| self.feature_names[j].clone()).collect();
        DataSet::new(values, feature_names, Some(self.labels.clone()), Some(self.row_ids.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(DataSet::from_rows(&[vec![1.0, 2.0]]), Err(Error::TooFewFeatures(2))));
        assert!(DataSet::from_rows(&[]).is_err());
        assert!(DataSet::from_rows(&[vec![1.0, 2.0, f64::NAN]]).is_err());
        let values = DMatrix::zeros(1, 3);
        let names = vec!["a".into(), "a".into(), "b".into()];
        assert!(DataSet::new(values, names, None, None).is_err());
    }

    #[test]
    fn defaults_to_single_class() {
        let ds = DataSet::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(ds.classes(), vec![DEFAULT_CLASS.to_string()]);
        assert_eq!(ds.row_ids(), ["1", "2"]);
    }

    #[test]
    fn drop_and_permute() {
        let ds = DataSet::from_rows(&[vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        let dropped = ds.drop_columns(&["x2".into()]).unwrap();
        assert_eq!(dropped.feature_names(), ["x1", "x3", "x4"]);
        assert_eq!(dropped.values()[(0, 1)], 3.0);
        assert!(matches!(ds.drop_columns(&["nope".into()]), Err(Error::MissingColumn(_))));
        let perm = ds.permute_columns(&[3, 2, 1, 0]).unwrap();
        assert_eq!(perm.values()[(0, 0)], 4.0);
        assert_eq!(perm.feature_names()[0], "x4");
    }
}
