use serde::{Deserialize, Serialize};

use super::linalg::{center, cross_cov, jacobi_eigen, matmul, transpose, Mat};
use crate::error::{Error, Result};

/// Columns scaled to zero mean and unit sample variance. Constant columns
/// become all-zero.
pub fn standardize(x: &Mat) -> Mat {
    let (c, _) = center(x);
    let n = c.len();
    let d = c.first().map_or(0, Vec::len);
    let sds: Vec<f64> = (0..d)
        .map(|j| (c.iter().map(|r| r[j] * r[j]).sum::<f64>() / (n.max(2) - 1) as f64).sqrt())
        .collect();
    c.into_iter()
        .map(|r| {
            r.into_iter()
                .zip(&sds)
                .map(|(v, &s)| if s > 1e-12 { v / s } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Principal axes retained by a variance threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpace {
    pub means: Vec<f64>,
    /// d x k, orthonormal columns.
    pub loadings: Mat,
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
    pub variance_retained: f64,
}

impl ComponentSpace {
    pub fn k(&self) -> usize {
        self.explained_variance.len()
    }
}

/// Relative size below which an eigenvalue counts as zero.
const RANK_TOL: f64 = 1e-10;

pub fn pca_fit(x: &Mat, variance_threshold: f64) -> Result<ComponentSpace> {
    let n = x.len();
    if n < 2 {
        return Err(Error::input("PCA needs at least two rows"));
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(Error::input("PCA needs a non-empty rectangular matrix"));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("PCA input has non-finite values".into()));
    }
    if !(0.0 < variance_threshold && variance_threshold <= 1.0) {
        return Err(Error::input(format!(
            "variance threshold must be in (0,1], got {variance_threshold}"
        )));
    }
    let (xc, means) = center(x);
    let (values, vectors) = if d <= n {
        jacobi_eigen(&cross_cov(&xc, &xc))
    } else {
        // Gram trick: eigenvectors of X Xᵀ map to those of Xᵀ X.
        let (vals, u) = jacobi_eigen(&cross_cov(&transpose(&xc), &transpose(&xc)));
        let xt = transpose(&xc);
        let lifted = matmul(&xt, &u);
        let vecs = lifted
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&vals)
                    .map(|(v, &l)| {
                        let norm = (l * (n - 1) as f64).sqrt();
                        if norm > 0.0 { v / norm } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        (vals, vecs)
    };
    let total: f64 = (0..d).map(|j| xc.iter().map(|r| r[j] * r[j]).sum::<f64>()).sum::<f64>()
        / (n - 1) as f64;
    if total <= 0.0 {
        return Err(Error::Numeric("PCA input has zero variance".into()));
    }
    let max = values.first().copied().unwrap_or(0.0);
    let positive: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] > RANK_TOL * max.max(f64::MIN_POSITIVE))
        .collect();
    let mut k = 0;
    let mut cum = 0.0;
    for &i in &positive {
        k += 1;
        cum += values[i];
        if cum / total >= variance_threshold - 1e-12 {
            break;
        }
    }
    let mut loadings = vec![Vec::with_capacity(k); d];
    for &c in &positive[..k] {
        let mut col: Vec<f64> = vectors.iter().map(|r| r[c]).collect();
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        col.iter_mut().for_each(|v| *v /= norm);
        // Sign convention: the largest-magnitude entry is positive.
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() + 1e-12 { v } else { m });
        if pivot < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
        loadings.iter_mut().zip(col).for_each(|(row, v)| row.push(v));
    }
    let explained: Vec<f64> = positive[..k].iter().map(|&i| values[i]).collect();
    let retained = (explained.iter().sum::<f64>() / total).min(1.0);
    Ok(ComponentSpace {
        means,
        loadings,
        explained_variance: explained,
        total_variance: total,
        variance_retained: retained,
    })
}

pub fn pca_transform(space: &ComponentSpace, x: &Mat) -> Mat {
    let xc: Mat = x
        .iter()
        .map(|r| r.iter().zip(&space.means).map(|(v, m)| v - m).collect())
        .collect();
    matmul(&xc, &space.loadings)
}

pub fn pca_inverse(space: &ComponentSpace, scores: &Mat) -> Mat {
    matmul(scores, &transpose(&space.loadings))
        .into_iter()
        .map(|r| r.into_iter().zip(&space.means).map(|(v, m)| v + m).collect())
        .collect()
}
