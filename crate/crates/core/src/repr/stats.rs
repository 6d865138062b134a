use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::{center, cross_cov, jacobi_eigen, matmul, transpose, Mat};
use crate::error::{Error, Result};

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        idx[i..=j].iter().for_each(|&k| ranks[k] = r);
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; `None` when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpearmanCross {
    /// `rho[i][j]` pairs column `i` of A with column `j` of B.
    pub rho: Mat,
    /// Pairs where a constant column forced rho to 0.
    pub constant_pairs: Vec<(usize, usize)>,
    pub max_abs: f64,
    /// Mean over B's columns of the largest |rho| in that column.
    pub mean_of_per_column_max: f64,
}

fn columns(m: &Mat) -> Vec<Vec<f64>> {
    transpose(m)
}

pub fn spearman_cross(a: &Mat, b: &Mat) -> Result<SpearmanCross> {
    if a.len() != b.len() {
        return Err(Error::input(format!("row counts differ: {} vs {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::input("Spearman needs at least two rows"));
    }
    let ra: Vec<Vec<f64>> = columns(a).iter().map(|c| average_ranks(c)).collect();
    let rb: Vec<Vec<f64>> = columns(b).iter().map(|c| average_ranks(c)).collect();
    let rows: Vec<Vec<Option<f64>>> = ra
        .par_iter()
        .map(|x| rb.iter().map(|y| pearson(x, y)).collect())
        .collect();
    let mut constant_pairs = Vec::new();
    let rho: Mat = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, v)| {
                    v.unwrap_or_else(|| {
                        constant_pairs.push((i, j));
                        0.0
                    })
                })
                .collect()
        })
        .collect();
    let max_abs = rho.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let nb = rb.len();
    let mean_of_per_column_max = if nb == 0 {
        0.0
    } else {
        (0..nb)
            .map(|j| rho.iter().fold(0.0f64, |m, r| m.max(r[j].abs())))
            .sum::<f64>()
            / nb as f64
    };
    Ok(SpearmanCross {
        rho,
        constant_pairs,
        max_abs,
        mean_of_per_column_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcaResult {
    pub correlations: Vec<f64>,
    pub mean: f64,
}

pub const DEFAULT_RIDGE: f64 = 1e-6;

/// `S^{-1/2}` of a symmetric positive definite matrix.
fn inv_sqrt(s: &Mat, ridge: f64, side: &str) -> Result<Mat> {
    let (vals, vecs) = jacobi_eigen(s);
    let max = vals.first().copied().unwrap_or(0.0).abs();
    let min = vals.last().copied().unwrap_or(0.0);
    if min <= 1e-12 * max.max(f64::MIN_POSITIVE) {
        return Err(Error::Numeric(format!(
            "within-set covariance of {side} is singular{}; use a positive ridge",
            if ridge > 0.0 { " even with the given ridge" } else { "" }
        )));
    }
    let d = s.len();
    let mut out = vec![vec![0.0; d]; d];
    for (k, &l) in vals.iter().enumerate() {
        let w = 1.0 / l.sqrt();
        for i in 0..d {
            for j in 0..d {
                out[i][j] += w * vecs[i][k] * vecs[j][k];
            }
        }
    }
    Ok(out)
}

/// First `k` canonical correlations between the column spaces of `a` and
/// `b`, with `ridge` added to both within-set covariance diagonals.
pub fn cca(a: &Mat, b: &Mat, k: usize, ridge: f64) -> Result<CcaResult> {
    if a.len() != b.len() {
        return Err(Error::input(format!("row counts differ: {} vs {}", a.len(), b.len())));
    }
    let n = a.len();
    let (da, db) = (a.first().map_or(0, Vec::len), b.first().map_or(0, Vec::len));
    if da == 0 || db == 0 {
        return Err(Error::input("CCA needs non-empty spaces"));
    }
    if n <= da.max(db) {
        return Err(Error::input(format!(
            "CCA needs more rows ({n}) than columns ({})",
            da.max(db)
        )));
    }
    if k > da.min(db) {
        return Err(Error::input(format!("k = {k} exceeds min dimension {}", da.min(db))));
    }
    if ridge < 0.0 {
        return Err(Error::input("ridge must be non-negative"));
    }
    let (ac, _) = center(a);
    let (bc, _) = center(b);
    let mut saa = cross_cov(&ac, &ac);
    let mut sbb = cross_cov(&bc, &bc);
    (0..da).for_each(|i| saa[i][i] += ridge);
    (0..db).for_each(|i| sbb[i][i] += ridge);
    let sab = cross_cov(&ac, &bc);
    let wa = inv_sqrt(&saa, ridge, "A")?;
    let wb = inv_sqrt(&sbb, ridge, "B")?;
    let m = matmul(&matmul(&wa, &sab), &wb);
    let mmt = matmul(&m, &transpose(&m));
    let (vals, _) = jacobi_eigen(&mmt);
    let correlations: Vec<f64> = vals
        .iter()
        .take(k)
        .map(|&v| v.max(0.0).sqrt().clamp(0.0, 1.0))
        .collect();
    let mean = if correlations.is_empty() {
        0.0
    } else {
        correlations.iter().sum::<f64>() / correlations.len() as f64
    };
    Ok(CcaResult { correlations, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn spearman_textbook() {
        // d = rank differences; rho = 1 - 6 Σd² / (n(n²-1)) without ties.
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 1.0, 4.0, 3.0, 5.0];
        let rho = spearman(&a, &b).unwrap();
        assert!((rho - (1.0 - 6.0 * 4.0 / 120.0)).abs() < 1e-12);
    }
}
