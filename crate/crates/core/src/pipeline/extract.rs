use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{product_columns, PROCESS_METRICS};
use crate::error::Result;
use crate::history::{changed_methods, process_metrics_for, Target};
use crate::metrics::{file_method_rows, FileSummary, ProjectIndex};
use crate::mining::{list_files, show_file, CommitRecord, KeywordSet};
use crate::naturalness::{cross_entropy, tokenize, train_ngram, NgramModel, Smoothing};
use crate::python::{parse_source, ParsedFile};

use super::io::{fmt_f64, Provenance, Table};

/// Method column value: `path::qualified_name`.
pub fn method_key(path: &str, qualified_name: &str) -> String {
    crate::metrics::index::unit_key(path, qualified_name)
}

/// One faulty method: the parent-version method a bug fix touched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultMethod {
    pub repo_id: String,
    pub commit_id: String,
    pub method: String,
    pub file_path: String,
    pub qualified_name: String,
    /// Source of the method before the fix.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultMetrics {
    pub method: FaultMethod,
    pub product: Vec<f64>,
    pub presence: u8,
    pub process: Vec<f64>,
}

fn parse_all(repo: &Path, rev: &str) -> Result<Vec<(String, ParsedFile)>> {
    let paths: Vec<String> = list_files(repo, rev)?
        .into_iter()
        .filter(|p| p.ends_with(".py"))
        .collect();
    let parsed: Vec<Option<(String, ParsedFile)>> = paths
        .par_iter()
        .map(|p| {
            let source = show_file(repo, rev, p).ok()??;
            match parse_source(p, &source) {
                Ok(f) => Some((p.clone(), f)),
                Err(e) => {
                    warn!("{rev}:{p}: {e}");
                    None
                }
            }
        })
        .collect();
    Ok(parsed.into_iter().flatten().collect())
}

/// Product and process metrics of every method a bug-fixing commit
/// touches, measured on the commit's parent.
pub fn fault_metrics(
    repo: &Path,
    commit: &CommitRecord,
    keywords: &KeywordSet,
) -> Result<Vec<FaultMetrics>> {
    let Some((parent, targets)) = changed_methods(repo, &commit.commit_id)? else {
        return Ok(Vec::new());
    };
    if targets.is_empty() {
        return Ok(Vec::new());
    }
    let files = parse_all(repo, &parent)?;
    let summaries: Vec<FileSummary> = files.iter().map(|(_, f)| FileSummary::of(f)).collect();
    let index = ProjectIndex::build(files.iter().map(|(p, _)| p.as_str()).zip(&summaries));
    let wanted: BTreeSet<(&str, &str)> = targets
        .iter()
        .map(|t| (t.path.as_str(), t.qualified_name.as_str()))
        .collect();
    let process: BTreeMap<Target, Vec<f64>> = process_metrics_for(repo, &parent, &targets, keywords)?
        .into_iter()
        .map(|(t, m)| (t, m.values))
        .collect();

    let mut out = Vec::new();
    for (path, file) in &files {
        if !wanted.iter().any(|(p, _)| p == path) {
            continue;
        }
        let sources: BTreeMap<&str, &str> = file
            .root
            .methods()
            .into_iter()
            .map(|u| (u.qualified_name.as_str(), u.body_text.as_str()))
            .collect();
        for row in file_method_rows(path, file, &index) {
            if !wanted.contains(&(path.as_str(), row.qualified_name.as_str())) {
                continue;
            }
            let target = Target::new(path.clone(), row.qualified_name.clone());
            out.push(FaultMetrics {
                method: FaultMethod {
                    repo_id: commit.repo_id.clone(),
                    commit_id: commit.commit_id.clone(),
                    method: method_key(path, &row.qualified_name),
                    file_path: path.clone(),
                    qualified_name: row.qualified_name.clone(),
                    source: sources.get(row.qualified_name.as_str()).copied().unwrap_or("").to_string(),
                },
                product: row.metrics.values,
                presence: row.metrics.presence,
                process: process.get(&target).cloned().unwrap_or_else(|| vec![0.0; PROCESS_METRICS.len()]),
            });
        }
    }
    Ok(out)
}

pub fn product_table(rows: &[FaultMetrics], prov: &Provenance) -> Table {
    let mut header: Vec<String> = ["repo_id", "commit_id", "method"].map(String::from).to_vec();
    header.extend(product_columns().iter().map(|s| s.to_string()));
    header.push("presence".into());
    let mut t = Table::new(header);
    t.provenance = Some(prov.clone());
    for r in rows {
        let mut rec = vec![r.method.repo_id.clone(), r.method.commit_id.clone(), r.method.method.clone()];
        rec.extend(r.product.iter().map(|v| fmt_f64(*v)));
        rec.push(r.presence.to_string());
        t.rows.push(rec);
    }
    t
}

pub fn process_table(rows: &[FaultMetrics], prov: &Provenance) -> Table {
    let mut header: Vec<String> = ["repo_id", "commit_id", "method"].map(String::from).to_vec();
    header.extend(PROCESS_METRICS.iter().map(|s| s.to_string()));
    let mut t = Table::new(header);
    t.provenance = Some(prov.clone());
    for r in rows {
        let mut rec = vec![r.method.repo_id.clone(), r.method.commit_id.clone(), r.method.method.clone()];
        rec.extend(r.process.iter().map(|v| fmt_f64(*v)));
        t.rows.push(rec);
    }
    t
}

/// Train the entropy model on `corpus` (file texts).
pub fn train_entropy_model(corpus: &[String], order: usize, k: f64) -> Result<NgramModel> {
    let docs: Vec<Vec<String>> = corpus.iter().map(|t| tokenize(t)).collect();
    train_ngram(&docs, order, Smoothing::AddK(k))
}

/// Default training corpus: every Python file at HEAD of each repository
/// that no fault touches, sorted by (repo, path).
pub fn default_corpus(
    repos: &BTreeMap<String, &Path>,
    faults: &[FaultMethod],
) -> Result<Vec<String>> {
    let fault_files: BTreeSet<(&str, &str)> = faults
        .iter()
        .map(|f| (f.repo_id.as_str(), f.file_path.as_str()))
        .collect();
    let mut corpus = Vec::new();
    for (id, path) in repos {
        for file in list_files(path, "HEAD")? {
            if file.ends_with(".py") && !fault_files.contains(&(id.as_str(), file.as_str())) {
                if let Some(text) = show_file(path, "HEAD", &file)? {
                    corpus.push(text);
                }
            }
        }
    }
    Ok(corpus)
}

pub fn entropy_table(model: &NgramModel, faults: &[FaultMethod], prov: &Provenance) -> Table {
    let mut t = Table::new(["repo_id", "commit_id", "method", "ENT"].map(String::from).to_vec());
    t.provenance = Some(prov.clone());
    let values: Vec<f64> = faults
        .par_iter()
        .map(|f| cross_entropy(model, &tokenize(&f.source)))
        .collect();
    for (f, v) in faults.iter().zip(values) {
        t.rows.push(vec![f.repo_id.clone(), f.commit_id.clone(), f.method.clone(), fmt_f64(v)]);
    }
    t
}
