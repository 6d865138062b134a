use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{feature_columns, product_columns, PROCESS_METRICS};
use crate::error::{Error, Result};
use crate::labeling::{Label, LabelRecord};
use crate::learners::FeatureMatrix;
use crate::metrics::normalize_code;
use crate::naturalness;

use super::io::{fmt_f64, parse_f64, Provenance, Table};

pub const KEY_COLUMNS: [&str; 3] = ["repo_id", "commit_id", "method"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub repo_id: String,
    pub commit_id: String,
    pub method: String,
    /// Feature values in catalog order.
    pub features: Vec<f64>,
    /// 1 residual, 0 non-residual, -1 unknown (only with `include_unknown`).
    pub label: i8,
}

impl DatasetRow {
    /// Unique row id: `repo@commit:method`.
    pub fn id(&self) -> String {
        format!("{}@{}:{}", self.repo_id, self.commit_id, self.method)
    }

    fn key(&self) -> (&str, &str, &str) {
        (&self.repo_id, &self.commit_id, &self.method)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
}

/// Counts of what assembly dropped or filled in.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssembleReport {
    pub rows: usize,
    pub dropped_unlabeled: usize,
    pub dropped_unknown: usize,
    pub dropped_missing: usize,
    pub zero_filled: usize,
}

type Key = (String, String, String);

fn keyed_values(table: &Table, columns: &[&str], what: &str) -> Result<BTreeMap<Key, Vec<f64>>> {
    let key_idx = KEY_COLUMNS
        .iter()
        .map(|c| table.require_column(c))
        .collect::<Result<Vec<_>>>()?;
    let val_idx = columns
        .iter()
        .map(|c| table.require_column(c))
        .collect::<Result<Vec<_>>>()?;
    let mut out = BTreeMap::new();
    let mut dups = BTreeSet::new();
    for row in &table.rows {
        let key = (row[key_idx[0]].clone(), row[key_idx[1]].clone(), row[key_idx[2]].clone());
        let values = val_idx
            .iter()
            .zip(columns)
            .map(|(&i, c)| parse_f64(&row[i], &format!("{what} {c}")))
            .collect::<Result<Vec<f64>>>()?;
        if out.insert(key.clone(), values).is_some() {
            dups.insert(format!("{what}: {}@{}:{}", key.0, key.1, key.2));
        }
    }
    if !dups.is_empty() {
        return Err(Error::DuplicateKeys(dups.into_iter().collect()));
    }
    Ok(out)
}

/// Inner-join labels, product metrics, process metrics and ENT into the
/// modeling dataset.
///
/// Rows without a label are dropped; Unknown labels are dropped unless
/// `include_unknown` (kept as -1). A row missing process metrics or ENT is
/// dropped with a warning, or zero-filled when `zero_fill_missing`.
pub fn assemble_dataset(
    labels: &[LabelRecord],
    product: &Table,
    process: &Table,
    entropy: &Table,
    include_unknown: bool,
    zero_fill_missing: bool,
) -> Result<(Dataset, AssembleReport)> {
    let mut label_of: HashMap<(&str, &str), Label> = HashMap::new();
    let mut dups = BTreeSet::new();
    for l in labels {
        if label_of.insert((&l.repo_id, &l.commit_id), l.label).is_some() {
            dups.insert(format!("labels: {}@{}", l.repo_id, l.commit_id));
        }
    }
    if !dups.is_empty() {
        return Err(Error::DuplicateKeys(dups.into_iter().collect()));
    }
    let product_cols = product_columns();
    let prod = keyed_values(product, &product_cols, "product")?;
    let proc_ = keyed_values(process, &PROCESS_METRICS, "process")?;
    let ent = keyed_values(entropy, &["ENT"], "entropy")?;

    let features = feature_columns();
    let source: Vec<(usize, usize)> = features
        .iter()
        .map(|f| {
            if let Some(i) = product_cols.iter().position(|c| c == f) {
                (0, i)
            } else if let Some(i) = PROCESS_METRICS.iter().position(|c| c == f) {
                (1, i)
            } else {
                (2, 0)
            }
        })
        .collect();

    let mut report = AssembleReport::default();
    let mut rows = Vec::new();
    for (key, pvals) in &prod {
        let label = match label_of.get(&(key.0.as_str(), key.1.as_str())) {
            None => {
                report.dropped_unlabeled += 1;
                continue;
            }
            Some(Label::Unknown) if !include_unknown => {
                report.dropped_unknown += 1;
                continue;
            }
            Some(l) => l.as_class().map_or(-1, |c| c as i8),
        };
        let (proc_vals, ent_vals) = (proc_.get(key), ent.get(key));
        if proc_vals.is_none() || ent_vals.is_none() {
            if !zero_fill_missing {
                warn!("{}@{}:{}: missing process metrics or ENT, dropped", key.0, key.1, key.2);
                report.dropped_missing += 1;
                continue;
            }
            report.zero_filled += 1;
        }
        let zeros_proc = vec![0.0; PROCESS_METRICS.len()];
        let proc_vals = proc_vals.unwrap_or(&zeros_proc);
        let ent_val = ent_vals.map_or(0.0, |v| v[0]);
        let values = source
            .iter()
            .map(|&(part, i)| match part {
                0 => pvals[i],
                1 => proc_vals[i],
                _ => ent_val,
            })
            .collect();
        rows.push(DatasetRow {
            repo_id: key.0.clone(),
            commit_id: key.1.clone(),
            method: key.2.clone(),
            features: values,
            label,
        });
    }
    report.rows = rows.len();
    Ok((Dataset { rows }, report))
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_table(&self, prov: &Provenance) -> Table {
        let mut header: Vec<String> = KEY_COLUMNS.map(String::from).to_vec();
        header.extend(feature_columns().iter().map(|s| s.to_string()));
        header.push("label".into());
        let mut t = Table::new(header);
        t.provenance = Some(prov.clone());
        for r in &self.rows {
            let mut rec = vec![r.repo_id.clone(), r.commit_id.clone(), r.method.clone()];
            rec.extend(r.features.iter().map(|v| fmt_f64(*v)));
            rec.push(r.label.to_string());
            t.rows.push(rec);
        }
        t
    }

    /// Parse a dataset table; the header must be exactly the key columns,
    /// the catalog features and `label`.
    pub fn from_table(t: &Table) -> Result<Self> {
        let features = feature_columns();
        let expected: Vec<&str> = KEY_COLUMNS
            .iter()
            .copied()
            .chain(features.iter().copied())
            .chain(["label"])
            .collect();
        if t.header.iter().map(String::as_str).ne(expected.iter().copied()) {
            return Err(Error::Schema(
                "dataset header does not match the feature catalog".into(),
            ));
        }
        let nf = features.len();
        let mut rows = Vec::with_capacity(t.rows.len());
        for rec in &t.rows {
            let values = rec[3..3 + nf]
                .iter()
                .zip(&features)
                .map(|(v, c)| parse_f64(v, c))
                .collect::<Result<Vec<f64>>>()?;
            let label: i8 = match rec[3 + nf].trim() {
                "1" => 1,
                "0" => 0,
                "-1" => -1,
                other => return Err(Error::input(format!("bad label {other:?}"))),
            };
            rows.push(DatasetRow {
                repo_id: rec[0].clone(),
                commit_id: rec[1].clone(),
                method: rec[2].clone(),
                features: values,
                label,
            });
        }
        let mut seen = BTreeSet::new();
        let dups: Vec<String> = rows
            .iter()
            .filter(|r| !seen.insert(r.key()))
            .map(DatasetRow::id)
            .collect();
        if !dups.is_empty() {
            return Err(Error::DuplicateKeys(dups));
        }
        Ok(Dataset { rows })
    }

    /// Labeled rows as a feature matrix; unknown-labeled rows are skipped.
    pub fn feature_matrix(&self) -> Result<FeatureMatrix> {
        let labeled: Vec<&DatasetRow> = self.rows.iter().filter(|r| r.label >= 0).collect();
        if labeled.len() < self.rows.len() {
            warn!("{} unknown-labeled rows excluded from modeling", self.rows.len() - labeled.len());
        }
        FeatureMatrix::new(
            feature_columns().iter().map(|s| s.to_string()).collect(),
            labeled.iter().map(|r| r.features.clone()).collect(),
            Some(labeled.iter().map(|r| r.label as u8).collect()),
        )
    }

    pub fn commit_ids(&self) -> BTreeSet<(&str, &str)> {
        self.rows.iter().map(|r| (r.repo_id.as_str(), r.commit_id.as_str())).collect()
    }
}

/// Commit-grouped split. Commit groups are shuffled by `seed` and fill the
/// training side until it holds at least `round(ratio * n)` rows, so the
/// training share overshoots by less than one group. Both sides get at
/// least one group when there are two or more.
pub fn split_dataset(dataset: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if dataset.len() < 2 {
        return Err(Error::input("splitting needs at least two rows"));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::input(format!("split ratio must be in (0,1), got {ratio}")));
    }
    let mut groups: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (i, r) in dataset.rows.iter().enumerate() {
        groups.entry((&r.repo_id, &r.commit_id)).or_default().push(i);
    }
    let mut order: Vec<Vec<usize>> = groups.into_values().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let target = ((ratio * dataset.len() as f64).round() as usize).max(1);
    let mut n_train_groups = 0;
    let mut taken = 0;
    for g in &order {
        if taken >= target {
            break;
        }
        taken += g.len();
        n_train_groups += 1;
    }
    if order.len() >= 2 && n_train_groups == order.len() {
        n_train_groups -= 1;
    }
    let mut train_idx: Vec<usize> = order[..n_train_groups].iter().flatten().copied().collect();
    let mut test_idx: Vec<usize> = order[n_train_groups..].iter().flatten().copied().collect();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let pick = |idx: &[usize]| Dataset {
        rows: idx.iter().map(|&i| dataset.rows[i].clone()).collect(),
    };
    let (train, test) = (pick(&train_idx), pick(&test_idx));
    assert_no_leakage(&train, &test)?;
    Ok((train, test))
}

/// Fails when a commit contributes rows to both sides.
pub fn assert_no_leakage(train: &Dataset, test: &Dataset) -> Result<()> {
    let a = train.commit_ids();
    let shared: Vec<String> = test
        .commit_ids()
        .intersection(&a)
        .map(|(r, c)| format!("{r}@{c}"))
        .collect();
    if shared.is_empty() {
        Ok(())
    } else {
        Err(Error::Internal(format!(
            "commits appear in both splits: {}",
            shared.join(", ")
        )))
    }
}

/// Statement-level statistics over normalised method sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementStats {
    pub methods: usize,
    pub unique_statements: usize,
    pub unique_tokens: usize,
    /// Mean token count over the unique statements.
    pub avg_tokens_per_statement: f64,
    pub bin_width: usize,
    /// `(bin start, methods)` of total tokens per method.
    pub histogram: Vec<(usize, usize)>,
}

fn line_tokens(line: &str) -> Vec<String> {
    let mut t = naturalness::tokenize(line);
    // drop the sentence markers
    t.remove(0);
    t.pop();
    t
}

/// Statements are the non-blank lines of each normalised source; tokens
/// follow the naturalness tokenizer.
pub fn statement_stats<'a>(sources: impl IntoIterator<Item = &'a str>, bin_width: usize) -> StatementStats {
    let bin_width = bin_width.max(1);
    let mut statements = BTreeSet::new();
    let mut bins: BTreeMap<usize, usize> = BTreeMap::new();
    let mut methods = 0;
    for src in sources {
        methods += 1;
        let norm = normalize_code(src).text;
        let mut total = 0;
        for line in norm.lines().map(str::trim).filter(|l| !l.is_empty()) {
            total += line_tokens(line).len();
            statements.insert(line.to_string());
        }
        *bins.entry(total / bin_width * bin_width).or_default() += 1;
    }
    let mut tokens = BTreeSet::new();
    let mut token_total = 0;
    for s in &statements {
        let t = line_tokens(s);
        token_total += t.len();
        tokens.extend(t);
    }
    StatementStats {
        methods,
        unique_statements: statements.len(),
        unique_tokens: tokens.len(),
        avg_tokens_per_statement: if statements.is_empty() {
            0.0
        } else {
            token_total as f64 / statements.len() as f64
        },
        bin_width,
        histogram: bins.into_iter().collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitFilter {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelFilter {
    Residual,
    NonResidual,
    All,
}

impl LabelFilter {
    fn admits(self, label: i8) -> bool {
        match self {
            LabelFilter::Residual => label == 1,
            LabelFilter::NonResidual => label == 0,
            LabelFilter::All => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsEntry {
    pub split: SplitFilter,
    pub label: LabelFilter,
    #[serde(flatten)]
    pub stats: StatementStats,
}

/// Statistics for one split and label filter. `sources` maps row ids to
/// method source text; rows without a source are skipped.
pub fn dataset_stats(
    train: &Dataset,
    test: &Dataset,
    sources: &HashMap<String, String>,
    split: SplitFilter,
    label: LabelFilter,
    bin_width: usize,
) -> StatementStats {
    let sides: Vec<&Dataset> = match split {
        SplitFilter::Train => vec![train],
        SplitFilter::Test => vec![test],
        SplitFilter::All => vec![train, test],
    };
    let texts: Vec<&str> = sides
        .iter()
        .flat_map(|d| d.rows.iter())
        .filter(|r| label.admits(r.label))
        .filter_map(|r| sources.get(&r.id()).map(String::as_str))
        .collect();
    statement_stats(texts, bin_width)
}

/// Every split x label combination.
pub fn stats_report(
    train: &Dataset,
    test: &Dataset,
    sources: &HashMap<String, String>,
    bin_width: usize,
) -> Vec<StatsEntry> {
    let mut out = Vec::new();
    for split in [SplitFilter::Train, SplitFilter::Test, SplitFilter::All] {
        for label in [LabelFilter::Residual, LabelFilter::NonResidual, LabelFilter::All] {
            out.push(StatsEntry {
                split,
                label,
                stats: dataset_stats(train, test, sources, split, label, bin_width),
            });
        }
    }
    out
}
