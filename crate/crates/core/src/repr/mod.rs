//! Geometry of the metric space against an external embedding space:
//! PCA of both, cross-space Spearman correlations and canonical
//! correlation analysis.

mod linalg;
mod pca;
mod stats;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use linalg::{jacobi_eigen, Mat};
pub use pca::{pca_fit, pca_inverse, pca_transform, standardize, ComponentSpace};
pub use stats::{
    average_ranks, cca, pearson, spearman, spearman_cross, CcaResult, SpearmanCross,
    DEFAULT_RIDGE,
};

/// Rows keyed by id, e.g. an embedding file or the metric columns of the
/// dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct IdMatrix {
    pub ids: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Mat,
}

impl IdMatrix {
    pub fn new(ids: Vec<String>, columns: Vec<String>, rows: Mat) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::input("id count differs from row count"));
        }
        if columns.is_empty() {
            return Err(Error::input("matrix has no value columns"));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(Error::input(format!("row {} has {} values", ids[i], rows[i].len())));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("matrix contains non-finite values"));
        }
        let mut seen = HashMap::new();
        let dups: Vec<String> = ids
            .iter()
            .filter(|id| seen.insert(id.as_str(), ()).is_some())
            .cloned()
            .collect();
        if !dups.is_empty() {
            return Err(Error::DuplicateKeys(dups));
        }
        Ok(IdMatrix { ids, columns, rows })
    }

    /// Reads a CSV whose first column is the id and the rest are numbers.
    /// Lines starting with `#` are skipped.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
        let header = rdr.headers()?.clone();
        let columns: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            ids.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        Error::input(format!("{}: bad number {v:?}", path.display()))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        IdMatrix::new(ids, columns, rows)
    }

    /// Inner join on id, in `self` order.
    pub fn join(&self, other: &IdMatrix) -> (Mat, Mat, Vec<String>) {
        let pos: HashMap<&str, usize> = other
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut ids = Vec::new();
        for (i, id) in self.ids.iter().enumerate() {
            if let Some(&j) = pos.get(id.as_str()) {
                a.push(self.rows[i].clone());
                b.push(other.rows[j].clone());
                ids.push(id.clone());
            }
        }
        (a, b, ids)
    }
}

/// How many canonical correlations the summary averages.
pub const CCA_SUMMARY_COMPONENTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub dimensions: usize,
    pub components: usize,
    pub variance_retained: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReprReport {
    pub rows: usize,
    pub variance_threshold: f64,
    pub metric: SpaceSummary,
    pub embedding: SpaceSummary,
    pub max_abs_spearman: f64,
    pub mean_per_component_max_spearman: f64,
    pub canonical_correlations: Vec<f64>,
    pub mean_canonical_correlation: f64,
    pub metric_centroid: [f64; 2],
    pub embedding_centroid: [f64; 2],
    pub centroid_distance: f64,
    /// Mean distance of points to their own centroid, over both clusters.
    pub intra_cluster_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPoint {
    pub cluster: String,
    pub component: Option<usize>,
    pub x: f64,
    pub y: f64,
}

/// Share of the variance of `target` explained by the (mutually
/// uncorrelated) columns of `space`.
fn explained_share(target: &[f64], space: &[Vec<f64>]) -> f64 {
    space
        .iter()
        .map(|c| pearson(target, c).unwrap_or(0.0).powi(2))
        .sum::<f64>()
        .min(1.0)
}

fn centroid(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len().max(1) as f64;
    [
        points.iter().map(|p| p[0]).sum::<f64>() / n,
        points.iter().map(|p| p[1]).sum::<f64>() / n,
    ]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Standardise and reduce both spaces, then compare them.
///
/// The 2-D projection places every retained component at (share of its
/// variance explained by the metric components, share explained by the
/// embedding components). Components of a space sit at 1 on their own axis,
/// so two unrelated spaces form clusters near (1, 0) and (0, 1) and
/// identical spaces collapse onto (1, 1).
pub fn orthogonality_report(
    metrics: &IdMatrix,
    embeddings: &IdMatrix,
    variance_threshold: f64,
) -> Result<(ReprReport, Vec<ProjectionPoint>)> {
    let (a, b, ids) = metrics.join(embeddings);
    if ids.len() < 3 {
        return Err(Error::input(format!(
            "only {} ids are shared by metrics and embeddings",
            ids.len()
        )));
    }
    let za = standardize(&a);
    let zb = standardize(&b);
    let sa = pca_fit(&za, variance_threshold)?;
    let sb = pca_fit(&zb, variance_threshold)?;
    let ta = pca_transform(&sa, &za);
    let tb = pca_transform(&sb, &zb);
    let sp = spearman_cross(&ta, &tb)?;
    let k = CCA_SUMMARY_COMPONENTS.min(sa.k()).min(sb.k());
    let cc = cca(&ta, &tb, k, DEFAULT_RIDGE)?;

    let ca = linalg::transpose(&ta);
    let cb = linalg::transpose(&tb);
    let pa: Vec<[f64; 2]> = ca
        .iter()
        .map(|c| [explained_share(c, &ca), explained_share(c, &cb)])
        .collect();
    let pb: Vec<[f64; 2]> = cb
        .iter()
        .map(|c| [explained_share(c, &ca), explained_share(c, &cb)])
        .collect();
    let (ma, mb) = (centroid(&pa), centroid(&pb));
    let spread = (pa.iter().map(|p| dist(*p, ma)).sum::<f64>()
        + pb.iter().map(|p| dist(*p, mb)).sum::<f64>())
        / (pa.len() + pb.len()) as f64;

    let mut points = Vec::new();
    for (cluster, pts) in [("metric", &pa), ("embedding", &pb)] {
        for (i, p) in pts.iter().enumerate() {
            points.push(ProjectionPoint {
                cluster: cluster.into(),
                component: Some(i + 1),
                x: p[0],
                y: p[1],
            });
        }
    }
    for (cluster, c) in [("metric_centroid", ma), ("embedding_centroid", mb)] {
        points.push(ProjectionPoint {
            cluster: cluster.into(),
            component: None,
            x: c[0],
            y: c[1],
        });
    }
    let report = ReprReport {
        rows: ids.len(),
        variance_threshold,
        metric: SpaceSummary {
            dimensions: a[0].len(),
            components: sa.k(),
            variance_retained: sa.variance_retained,
        },
        embedding: SpaceSummary {
            dimensions: b[0].len(),
            components: sb.k(),
            variance_retained: sb.variance_retained,
        },
        max_abs_spearman: sp.max_abs,
        mean_per_component_max_spearman: sp.mean_of_per_column_max,
        canonical_correlations: cc.correlations,
        mean_canonical_correlation: cc.mean,
        metric_centroid: ma,
        embedding_centroid: mb,
        centroid_distance: dist(ma, mb),
        intra_cluster_spread: spread,
    };
    Ok((report, points))
}

pub fn write_projection_csv(path: &Path, points: &[ProjectionPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::input(e.to_string()))?;
    w.write_record(["cluster", "component", "x", "y"])?;
    for p in points {
        w.write_record([
            p.cluster.clone(),
            p.component.map(|c| c.to_string()).unwrap_or_default(),
            format!("{:.10}", p.x),
            format!("{:.10}", p.y),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
