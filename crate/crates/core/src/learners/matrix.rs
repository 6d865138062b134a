use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense row-major feature matrix with named columns and optional binary
/// labels (1 = post-release / residual).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    columns: Vec<String>,
    values: Vec<f64>,
    rows: usize,
    labels: Option<Vec<u8>>,
}

impl FeatureMatrix {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<f64>>, labels: Option<Vec<u8>>) -> Result<Self> {
        let d = columns.len();
        let mut seen = HashSet::new();
        let dupes: Vec<String> = columns
            .iter()
            .filter(|c| !seen.insert(c.as_str()))
            .cloned()
            .collect();
        if !dupes.is_empty() {
            return Err(Error::DuplicateKeys(dupes));
        }
        let n = rows.len();
        let mut values = Vec::with_capacity(n * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::Schema(format!(
                    "row {i} has {} values, expected {d}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::input(format!(
                    "non-finite value in row {i}, column {}",
                    columns[j]
                )));
            }
            values.extend(row);
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Schema(format!("{} labels for {n} rows", l.len())));
            }
            if l.iter().any(|&v| v > 1) {
                return Err(Error::input("labels must be 0 or 1"));
            }
        }
        Ok(FeatureMatrix {
            columns,
            values,
            rows: n,
            labels,
        })
    }

    /// Unnamed columns `f0, f1, ...`; convenient for synthetic data.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Option<Vec<u8>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        Self::new((0..d).map(|j| format!("f{j}")).collect(), rows, labels)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.columns.len();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.columns.len() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        let d = self.columns.len();
        let mut values = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            columns: self.columns.clone(),
            values,
            rows: indices.len(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }

    /// Copy with column `j` replaced.
    pub fn with_column(&self, j: usize, column: &[f64]) -> FeatureMatrix {
        let mut out = self.clone();
        let d = self.columns.len();
        for (i, &v) in column.iter().enumerate() {
            out.values[i * d + j] = v;
        }
        out
    }

    pub fn schema_hash(&self) -> String {
        schema_hash(&self.columns)
    }

    /// Error unless both classes are present.
    pub fn require_both_classes(&self) -> Result<&[u8]> {
        let y = self
            .labels()
            .ok_or_else(|| Error::input("training requires labels"))?;
        let pos = y.iter().filter(|&&v| v == 1).count();
        if self.rows < 2 || pos == 0 || pos == y.len() {
            return Err(Error::input("training requires at least one example of each class"));
        }
        Ok(y)
    }
}

/// Stable short hash of an ordered column list.
pub fn schema_hash(columns: &[String]) -> String {
    let mut h = Sha256::new();
    for c in columns {
        h.update(c.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..8])
}
