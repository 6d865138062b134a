use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::HistorySlice;
use crate::catalog::PROCESS_METRICS;
use crate::mining::KeywordSet;

const DAY: f64 = 86_400.0;

/// The 25 process metrics in catalog order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessMetrics {
    pub values: Vec<f64>,
}

impl ProcessMetrics {
    pub fn get(&self, name: &str) -> Option<f64> {
        PROCESS_METRICS
            .iter()
            .position(|c| *c == name)
            .map(|i| self.values[i])
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("no process metric named {name}"))
    }
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Developer experience weights: share of touches, active span relative to
/// the method's age, and recency with a one-year decay.
const W_SHARE: f64 = 0.4;
const W_SPAN: f64 = 0.3;
const W_RECENCY: f64 = 0.3;

/// All process metrics of a slice.
///
/// Per-touch churn is method-level (lines added + deleted inside the method).
/// The commit family (MCLC, ACLC, TCC, CCA, CCD) uses whole-commit line
/// counts of the touching commits; CMC counts every commit to the file.
/// AMLC/MMLC use max(added, deleted) of a touch as its "LOC changed".
pub fn process_metrics(slice: &HistorySlice, keywords: &KeywordSet) -> ProcessMetrics {
    let touches = &slice.touches;
    let n = touches.len() as f64;

    let age = touches
        .first()
        .map_or(0.0, |t| ((slice.cutoff - t.timestamp) as f64 / DAY).max(0.0));
    let fc = touches.iter().filter(|t| keywords.matches(&t.message)).count() as f64;
    let bd = fc / (slice.loc_at_cutoff.max(1) as f64);

    let churns: Vec<f64> = touches.iter().map(|t| t.churn() as f64).collect();
    let tcch: f64 = churns.iter().sum();
    let mcch = churns.iter().copied().fold(0.0, f64::max);
    let acch = tcch / n.max(1.0);
    let tms: f64 = touches.iter().map(|t| t.statements_modified as f64).sum();

    let tc = n;
    let cmc = slice.file_commits as f64;
    let commit_churns: Vec<f64> = touches.iter().map(|t| t.commit_churn() as f64).collect();
    let tcc: f64 = commit_churns.iter().sum();
    let mclc = commit_churns.iter().copied().fold(0.0, f64::max);
    let aclc = tcc / n.max(1.0);
    let cca: f64 = touches.iter().map(|t| t.commit_added as f64).sum();
    let ccd: f64 = touches.iter().map(|t| t.commit_deleted as f64).sum();
    let cpc = touches
        .iter()
        .map(|t| t.changed_files.clone())
        .collect::<BTreeSet<_>>()
        .len() as f64;

    let mca: f64 = touches.iter().map(|t| t.lines_added as f64).sum();
    let mcd: f64 = touches.iter().map(|t| t.lines_deleted as f64).sum();
    let tmc = mca + mcd;
    let loc_changes: Vec<f64> = touches
        .iter()
        .map(|t| t.lines_added.max(t.lines_deleted) as f64)
        .collect();
    let amlc = loc_changes.iter().sum::<f64>() / n.max(1.0);
    let mmlc = loc_changes.iter().copied().fold(0.0, f64::max);

    // author -> (touches, first, last)
    let mut authors: BTreeMap<&str, (usize, i64, i64)> = BTreeMap::new();
    for t in touches {
        let e = authors
            .entry(t.author_id.as_str())
            .or_insert((0, t.timestamp, t.timestamp));
        e.0 += 1;
        e.1 = e.1.min(t.timestamp);
        e.2 = e.2.max(t.timestamp);
    }
    let da = authors.len() as f64;
    let dcn = touches
        .iter()
        .map(|t| t.author_name.as_str())
        .collect::<BTreeSet<_>>()
        .len() as f64;
    let ade = safe_div(
        authors
            .values()
            .map(|&(count, first, last)| {
                let share = count as f64 / n;
                let span = if age == 0.0 {
                    0.0
                } else {
                    ((last - first) as f64 / DAY) / age
                };
                let since = ((slice.cutoff - last) as f64 / DAY).max(0.0);
                W_SHARE * share + W_SPAN * span + W_RECENCY * (-since / 365.0).exp()
            })
            .sum(),
        da,
    );
    let aca = safe_div(tc, da);
    let acca = safe_div(tcch, da);

    ProcessMetrics {
        values: vec![
            age, bd, fc, acch, mcch, tcch, tms, tc, cmc, mclc, aclc, tcc, cca, ccd, cpc, mca, mcd,
            tmc, amlc, mmlc, da, ade, dcn, aca, acca,
        ],
    }
}
