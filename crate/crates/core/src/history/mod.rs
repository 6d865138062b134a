//! Process metrics from repository history.
//!
//! A method's history is reconstructed by walking its file's log (following
//! renames) up to a cutoff commit and comparing the method's text between
//! consecutive file versions. A commit *touches* the method when that text
//! changed, including the commit that created it.

mod process;

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};
use similar::{ChangeTag, TextDiff};

use crate::error::Result;
use crate::mining::{author_key, commit_time, run_git, show_file, KeywordSet};
use crate::python::{parse_source, UnitKind};
pub use process::{process_metrics, ProcessMetrics};

/// A method identified by file path (at the cutoff) and qualified name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Target {
    pub path: String,
    pub qualified_name: String,
}

impl Target {
    pub fn new(path: impl Into<String>, qualified_name: impl Into<String>) -> Self {
        Target {
            path: path.into(),
            qualified_name: qualified_name.into(),
        }
    }
}

/// One commit that changed the target method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Touch {
    pub commit_id: String,
    pub timestamp: i64,
    pub author_id: String,
    pub author_name: String,
    pub message: String,
    /// Lines added to / deleted from the method body.
    pub lines_added: usize,
    pub lines_deleted: usize,
    /// Changed method lines that are neither blank nor comment-only.
    pub statements_modified: usize,
    /// Lines added / deleted by the whole commit, all files.
    pub commit_added: usize,
    pub commit_deleted: usize,
    /// Sorted paths changed by the whole commit.
    pub changed_files: Vec<String>,
}

impl Touch {
    pub fn churn(&self) -> usize {
        self.lines_added + self.lines_deleted
    }

    pub fn commit_churn(&self) -> usize {
        self.commit_added + self.commit_deleted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistorySlice {
    pub target: Target,
    pub cutoff: i64,
    /// Ascending by timestamp; every timestamp is at most `cutoff`.
    pub touches: Vec<Touch>,
    /// Commits that changed the file (any line), up to the cutoff.
    pub file_commits: usize,
    /// Method LOC in the cutoff version (0 if absent there).
    pub loc_at_cutoff: usize,
}

impl HistorySlice {
    pub fn empty(target: Target, cutoff: i64) -> Self {
        HistorySlice {
            target,
            cutoff,
            touches: Vec::new(),
            file_commits: 0,
            loc_at_cutoff: 0,
        }
    }
}

#[derive(Debug, Clone)]
struct FileVersion {
    commit_id: String,
    timestamp: i64,
    author_id: String,
    author_name: String,
    message: String,
    /// Method texts by qualified name; `None` when the file is absent.
    methods: Option<Arc<HashMap<String, String>>>,
}

/// The history of one file up to a cutoff, parsed once and shared by all
/// methods in it.
#[derive(Debug, Clone)]
pub struct FileHistory {
    repo: std::path::PathBuf,
    path: String,
    cutoff: i64,
    versions: Vec<FileVersion>,
    numstat: HashMap<String, (usize, usize, Vec<String>)>,
}

fn method_texts(path: &str, source: &str) -> HashMap<String, String> {
    match parse_source(path, source) {
        Ok(parsed) => parsed
            .root
            .descendants()
            .into_iter()
            .filter(|u| u.kind == UnitKind::Method)
            .map(|u| (u.qualified_name.clone(), u.body_text.clone()))
            .collect(),
        Err(e) => {
            warn!("{e}");
            HashMap::new()
        }
    }
}

/// Lines added and deleted by a commit over all files, and the sorted set of
/// changed paths.
fn commit_numstat(repo: &Path, commit: &str) -> Result<(usize, usize, Vec<String>)> {
    let out = run_git(
        repo,
        &["diff-tree", "-r", "--no-commit-id", "--numstat", "--no-renames", "--root", commit],
    )?;
    let (mut added, mut deleted) = (0, 0);
    let mut files = Vec::new();
    for line in out.lines() {
        let mut parts = line.splitn(3, '\t');
        let (Some(a), Some(d), Some(p)) = (parts.next(), parts.next(), parts.next()) else {
            continue;
        };
        // binary files report "-"
        added += a.parse::<usize>().unwrap_or(0);
        deleted += d.parse::<usize>().unwrap_or(0);
        files.push(p.to_string());
    }
    files.sort();
    Ok((added, deleted, files))
}

impl FileHistory {
    /// Read the history of `path` (as named at `cutoff_rev`) up to and
    /// including `cutoff_rev`.
    pub fn load(repo: &Path, path: &str, cutoff_rev: &str) -> Result<Self> {
        let cutoff = commit_time(repo, cutoff_rev)?;
        let out = run_git(
            repo,
            &[
                "log",
                "--follow",
                "--no-merges",
                "-M",
                "--name-status",
                "--format=%x1e%H%x1f%ct%x1f%an%x1f%ae%x1f%B%x1f",
                cutoff_rev,
                "--",
                path,
            ],
        )?;
        let mut versions = Vec::new();
        for chunk in out.split('\x1e').filter(|c| !c.trim().is_empty()) {
            let fields: Vec<&str> = chunk.splitn(6, '\x1f').collect();
            if fields.len() < 6 {
                continue;
            }
            let timestamp: i64 = fields[1].trim().parse().unwrap_or(0);
            if timestamp > cutoff {
                continue;
            }
            let status = fields[5].lines().find(|l| !l.trim().is_empty()).unwrap_or("");
            let cols: Vec<&str> = status.split('\t').collect();
            let (deleted, at_path) = match cols.first().map(|s| &s[..1.min(s.len())]) {
                Some("D") => (true, cols.get(1).copied().unwrap_or(path)),
                Some("R") | Some("C") => (false, cols.get(2).copied().unwrap_or(path)),
                _ => (false, cols.get(1).copied().unwrap_or(path)),
            };
            let commit_id = fields[0].trim().to_string();
            let methods = if deleted {
                None
            } else {
                show_file(repo, &commit_id, at_path)?
                    .map(|src| Arc::new(method_texts(at_path, &src)))
            };
            versions.push(FileVersion {
                commit_id,
                timestamp,
                author_id: author_key(fields[2], fields[3]),
                author_name: fields[2].to_string(),
                message: fields[4].trim_end().to_string(),
                methods,
            });
        }
        // git log lists newest first; stable sort keeps topological order on equal times
        versions.reverse();
        versions.sort_by_key(|v| v.timestamp);
        Ok(FileHistory {
            repo: repo.to_path_buf(),
            path: path.to_string(),
            cutoff,
            versions,
            numstat: HashMap::new(),
        })
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    /// Commits in the file's history up to the cutoff.
    pub fn commit_count(&self) -> usize {
        self.versions.len()
    }

    /// Build the touch list for one method of this file.
    pub fn slice(&mut self, qualified_name: &str) -> Result<HistorySlice> {
        let target = Target::new(self.path.clone(), qualified_name);
        let mut touches = Vec::new();
        let mut previous: Option<String> = None;
        for i in 0..self.versions.len() {
            let current = self.versions[i]
                .methods
                .as_ref()
                .and_then(|m| m.get(qualified_name).cloned());
            if current != previous {
                let (added, deleted, statements) =
                    line_changes(previous.as_deref().unwrap_or(""), current.as_deref().unwrap_or(""));
                let v = self.versions[i].clone();
                let (commit_added, commit_deleted, changed_files) = self.numstat_of(&v.commit_id)?;
                touches.push(Touch {
                    commit_id: v.commit_id,
                    timestamp: v.timestamp,
                    author_id: v.author_id,
                    author_name: v.author_name,
                    message: v.message,
                    lines_added: added,
                    lines_deleted: deleted,
                    statements_modified: statements,
                    commit_added,
                    commit_deleted,
                    changed_files,
                });
            }
            previous = current;
        }
        let loc_at_cutoff = previous.map_or(0, |text| text.lines().count());
        if touches.is_empty() {
            warn!(
                "{}::{} not found before cutoff; empty history",
                self.path, qualified_name
            );
        }
        Ok(HistorySlice {
            target,
            cutoff: self.cutoff,
            touches,
            file_commits: self.versions.len(),
            loc_at_cutoff,
        })
    }

    fn numstat_of(&mut self, commit: &str) -> Result<(usize, usize, Vec<String>)> {
        if let Some(hit) = self.numstat.get(commit) {
            return Ok(hit.clone());
        }
        let stat = commit_numstat(&self.repo, commit)?;
        self.numstat.insert(commit.to_string(), stat.clone());
        Ok(stat)
    }
}

fn is_statement_line(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && !t.starts_with('#')
}

/// (added, deleted, statement lines changed) between two method texts.
pub fn line_changes(old: &str, new: &str) -> (usize, usize, usize) {
    let diff = TextDiff::from_lines(old, new);
    let (mut added, mut deleted, mut statements) = (0, 0, 0);
    for change in diff.iter_all_changes() {
        let counted = match change.tag() {
            ChangeTag::Insert => {
                added += 1;
                true
            }
            ChangeTag::Delete => {
                deleted += 1;
                true
            }
            ChangeTag::Equal => false,
        };
        if counted && is_statement_line(change.value()) {
            statements += 1;
        }
    }
    (added, deleted, statements)
}

/// History of one method up to and including `cutoff_rev`.
pub fn build_history_slice(repo: &Path, target: &Target, cutoff_rev: &str) -> Result<HistorySlice> {
    FileHistory::load(repo, &target.path, cutoff_rev)?.slice(&target.qualified_name)
}

/// Methods of the parent version that a commit's diff touches, with the
/// parent revision. Root commits and non-Python files yield nothing.
pub fn changed_methods(repo: &Path, commit: &str) -> Result<Option<(String, Vec<Target>)>> {
    let Some(parent) = crate::mining::first_parent(repo, commit)? else {
        return Ok(None);
    };
    let out = run_git(
        repo,
        &["diff", "-U0", "--no-color", "--no-renames", &parent, commit, "--", "*.py"],
    )?;
    let mut hunks: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
    let mut current: Option<String> = None;
    for line in out.lines() {
        if let Some(p) = line.strip_prefix("--- ") {
            current = p.strip_prefix("a/").map(str::to_string);
        } else if let (Some(h), Some(path)) = (line.strip_prefix("@@ -"), current.as_ref()) {
            let old = h.split_whitespace().next().unwrap_or("0");
            let mut parts = old.split(',');
            let start: usize = parts.next().and_then(|s| s.parse().ok()).unwrap_or(0);
            let count: usize = parts.next().and_then(|s| s.parse().ok()).unwrap_or(1);
            hunks.entry(path.clone()).or_default().push((start, count));
        }
    }
    let mut targets = Vec::new();
    let mut paths: Vec<&String> = hunks.keys().collect();
    paths.sort();
    for path in paths {
        let Some(source) = show_file(repo, &parent, path)? else {
            continue;
        };
        let parsed = match parse_source(path, &source) {
            Ok(p) => p,
            Err(e) => {
                warn!("{e}");
                continue;
            }
        };
        for unit in parsed.root.methods() {
            let (lo, hi) = unit.span;
            let hit = hunks[path].iter().any(|&(start, count)| {
                if count == 0 {
                    // pure insertion after line `start`
                    lo <= start && start < hi
                } else {
                    start <= hi && start + count - 1 >= lo
                }
            });
            if hit {
                targets.push(Target::new(path.clone(), unit.qualified_name.clone()));
            }
        }
    }
    Ok(Some((parent, targets)))
}

/// Process metrics for every target of one cutoff, sharing file histories.
pub fn process_metrics_for(
    repo: &Path,
    cutoff_rev: &str,
    targets: &[Target],
    keywords: &KeywordSet,
) -> Result<Vec<(Target, ProcessMetrics)>> {
    let mut files: HashMap<String, FileHistory> = HashMap::new();
    let mut out = Vec::new();
    for t in targets {
        if !files.contains_key(&t.path) {
            files.insert(t.path.clone(), FileHistory::load(repo, &t.path, cutoff_rev)?);
        }
        let slice = files.get_mut(&t.path).unwrap().slice(&t.qualified_name)?;
        out.push((t.clone(), process_metrics(&slice, keywords)));
    }
    Ok(out)
}
