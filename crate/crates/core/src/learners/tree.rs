//! Binary decision trees: Gini classification trees and second-order
//! regression trees for boosting.
//!
//! Candidate splits are scanned feature by feature in ascending index order
//! and threshold by threshold in ascending order, and a candidate replaces
//! the incumbent only with a strictly larger gain. Ties therefore go to the
//! lowest feature index, then the lowest threshold.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::FeatureMatrix;

/// Smallest impurity decrease worth a split.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A flattened tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, at: usize) -> usize {
            match t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }

    /// Impurity decrease attributed to each feature, weighted by node size.
    pub(crate) fn add_importance(&self, gains: &[(usize, f64)], out: &mut [f64]) {
        for &(feature, gain) in gains {
            out[feature] += gain;
        }
    }
}

/// Split search state shared by both builders.
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // guard against rounding up to `b`, which would send `b` left
    if m >= b {
        a
    } else {
        m
    }
}

fn sort_by_feature(x: &FeatureMatrix, idx: &mut [usize], f: usize) {
    idx.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
}

fn partition(x: &FeatureMatrix, idx: &[usize], f: usize, t: f64) -> (Vec<usize>, Vec<usize>) {
    idx.iter().partition(|&&i| x.get(i, f) <= t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GiniParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features examined per split; `None` for all.
    pub features_per_split: Option<usize>,
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

pub(crate) struct GiniBuilder<'a, R: Rng> {
    pub x: &'a FeatureMatrix,
    pub y: &'a [u8],
    pub params: GiniParams,
    pub rng: &'a mut R,
    pub nodes: Vec<Node>,
    /// (feature, weighted impurity decrease) per split, for MDI importance.
    pub gains: Vec<(usize, f64)>,
    pub total: f64,
}

impl<'a, R: Rng> GiniBuilder<'a, R> {
    pub fn new(x: &'a FeatureMatrix, y: &'a [u8], params: GiniParams, rng: &'a mut R) -> Self {
        GiniBuilder {
            x,
            y,
            params,
            rng,
            nodes: Vec::new(),
            gains: Vec::new(),
            total: 0.0,
        }
    }

    pub fn build(mut self, mut idx: Vec<usize>) -> (Tree, Vec<(usize, f64)>) {
        self.total = idx.len() as f64;
        self.grow(&mut idx, 0);
        (Tree { nodes: self.nodes }, self.gains)
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let at = self.nodes.len();
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i] == 1).count();
        let value = pos as f64 / n.max(1) as f64;
        self.nodes.push(Node::Leaf { value });
        let min_leaf = self.params.min_leaf.max(1);
        if pos == 0
            || pos == n
            || self.params.max_depth.is_some_and(|m| depth >= m)
            || n < 2 * min_leaf
        {
            return at;
        }
        let d = self.x.n_cols();
        let k = self.params.features_per_split.unwrap_or(d).clamp(1, d);
        let mut features: Vec<usize> = if k == d {
            (0..d).collect()
        } else {
            sample(self.rng, d, k).into_vec()
        };
        features.sort_unstable();

        let parent = gini(pos as f64, n as f64);
        let mut best = Best {
            gain: MIN_GAIN,
            feature: usize::MAX,
            threshold: 0.0,
        };
        for &f in &features {
            sort_by_feature(self.x, idx, f);
            let mut left_pos = 0usize;
            for j in 0..n - 1 {
                left_pos += self.y[idx[j]] as usize;
                let (a, b) = (self.x.get(idx[j], f), self.x.get(idx[j + 1], f));
                let left_n = j + 1;
                if a == b || left_n < min_leaf || n - left_n < min_leaf {
                    continue;
                }
                let (ln, rn) = (left_n as f64, (n - left_n) as f64);
                let child = (ln * gini(left_pos as f64, ln)
                    + rn * gini((pos - left_pos) as f64, rn))
                    / n as f64;
                let gain = parent - child;
                if gain > best.gain {
                    best = Best {
                        gain,
                        feature: f,
                        threshold: midpoint(a, b),
                    };
                }
            }
        }
        if best.feature == usize::MAX {
            return at;
        }
        self.gains
            .push((best.feature, best.gain * n as f64 / self.total));
        let (mut l, mut r) = partition(self.x, idx, best.feature, best.threshold);
        let left = self.grow(&mut l, depth + 1);
        let right = self.grow(&mut r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonParams {
    pub max_depth: usize,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum hessian sum per child.
    pub min_child_weight: f64,
}

/// Regression tree fit to gradients `g` and hessians `h`; leaves hold the
/// Newton step `-G / (H + lambda)`.
pub(crate) fn build_newton(
    x: &FeatureMatrix,
    g: &[f64],
    h: &[f64],
    params: NewtonParams,
    features: &[usize],
    idx: Vec<usize>,
) -> (Tree, Vec<(usize, f64)>) {
    let mut nodes = Vec::new();
    let mut gains = Vec::new();
    let mut idx = idx;
    grow_newton(x, g, h, params, features, &mut idx, 0, &mut nodes, &mut gains);
    (Tree { nodes }, gains)
}

#[allow(clippy::too_many_arguments)]
fn grow_newton(
    x: &FeatureMatrix,
    g: &[f64],
    h: &[f64],
    params: NewtonParams,
    features: &[usize],
    idx: &mut [usize],
    depth: usize,
    nodes: &mut Vec<Node>,
    gains: &mut Vec<(usize, f64)>,
) -> usize {
    let at = nodes.len();
    let gs: f64 = idx.iter().map(|&i| g[i]).sum();
    let hs: f64 = idx.iter().map(|&i| h[i]).sum();
    let lambda = params.lambda;
    nodes.push(Node::Leaf {
        value: -gs / (hs + lambda),
    });
    let n = idx.len();
    if depth >= params.max_depth || n < 2 {
        return at;
    }
    let score = |gg: f64, hh: f64| gg * gg / (hh + lambda);
    let parent = score(gs, hs);
    let mut best = Best {
        gain: MIN_GAIN,
        feature: usize::MAX,
        threshold: 0.0,
    };
    for &f in features {
        sort_by_feature(x, idx, f);
        let (mut gl, mut hl) = (0.0, 0.0);
        for j in 0..n - 1 {
            gl += g[idx[j]];
            hl += h[idx[j]];
            let (a, b) = (x.get(idx[j], f), x.get(idx[j + 1], f));
            if a == b || hl < params.min_child_weight || hs - hl < params.min_child_weight {
                continue;
            }
            let gain = score(gl, hl) + score(gs - gl, hs - hl) - parent;
            if gain > best.gain {
                best = Best {
                    gain,
                    feature: f,
                    threshold: midpoint(a, b),
                };
            }
        }
    }
    if best.feature == usize::MAX {
        return at;
    }
    gains.push((best.feature, best.gain));
    let (mut l, mut r) = partition(x, idx, best.feature, best.threshold);
    let left = grow_newton(x, g, h, params, features, &mut l, depth + 1, nodes, gains);
    let right = grow_newton(x, g, h, params, features, &mut r, depth + 1, nodes, gains);
    nodes[at] = Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left,
        right,
    };
    at
}
