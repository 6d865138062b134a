use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ScalerParams {
    /// Columns with zero spread; they scale to 0.
    pub fn constant_columns(&self) -> Vec<usize> {
        self.std
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.std[j] == 0.0 {
                    0.0
                } else {
                    (v - self.mean[j]) / self.std[j]
                }
            })
            .collect()
    }
}

pub fn fit_scaler(x: &FeatureMatrix) -> Result<ScalerParams> {
    let n = x.n_rows();
    if n == 0 || x.n_cols() == 0 {
        return Err(Error::input("cannot fit a scaler on an empty matrix"));
    }
    let d = x.n_cols();
    let mut mean = vec![0.0; d];
    for row in x.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for row in x.rows() {
        for j in 0..d {
            var[j] += (row[j] - mean[j]).powi(2);
        }
    }
    let std = var
        .into_iter()
        .zip(&mean)
        .map(|(v, &m)| {
            let s = (v / n as f64).sqrt();
            // spread below rounding noise of the mean is no spread
            if s <= 1e-12 * m.abs().max(1.0) {
                0.0
            } else {
                s
            }
        })
        .collect();
    Ok(ScalerParams { mean, std })
}

pub fn apply_scaler(params: &ScalerParams, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if params.mean.len() != x.n_cols() {
        return Err(Error::Schema(format!(
            "scaler has {} columns, matrix has {}",
            params.mean.len(),
            x.n_cols()
        )));
    }
    let mut out = x.clone();
    let d = x.n_cols();
    for (i, chunk) in out.values_mut().chunks_mut(d).enumerate() {
        chunk.copy_from_slice(&params.transform_row(x.row(i)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_std() {
        let x = FeatureMatrix::from_rows(vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]], None).unwrap();
        let p = fit_scaler(&x).unwrap();
        assert_eq!(p.mean, [2.0, 5.0]);
        assert!((p.std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(p.constant_columns(), [1]);
        let z = apply_scaler(&p, &x).unwrap();
        assert_eq!(z.column(1), [0.0, 0.0, 0.0]);
        assert!((z.get(0, 0) + (1.5f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_rejected() {
        let x = FeatureMatrix::from_rows(vec![], None).unwrap();
        assert!(fit_scaler(&x).is_err());
    }
}
