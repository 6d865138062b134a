use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::LabelRecord;
use crate::learners::ModelFile;
use crate::mining::{run_git, CommitRecord, KeywordSet, ReleaseInfo};
use crate::naturalness::NgramModel;
use crate::repr::write_projection_csv;

use super::config::PipelineConfig;
use super::dataset::{assemble_dataset, split_dataset, stats_report, Dataset, StatsEntry};
use super::extract::{
    default_corpus, entropy_table, fault_metrics, process_table, product_table,
    train_entropy_model, FaultMethod,
};
use super::io::{
    read_json, read_jsonl, read_text, sha256_hex, write_atomic, write_json, write_jsonl,
    Provenance, Table,
};
use super::mine::{classify_commits, mine_repos, repo_paths};
use super::modeling::{evaluate_models, explain_model, mcnemar_all, repr_analysis, train_models};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Mine,
    Classify,
    Metrics,
    Entropy,
    Assemble,
    Split,
    Train,
    Evaluate,
    Mcnemar,
    Explain,
    Stats,
    Repr,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Mine,
        Stage::Classify,
        Stage::Metrics,
        Stage::Entropy,
        Stage::Assemble,
        Stage::Split,
        Stage::Train,
        Stage::Evaluate,
        Stage::Mcnemar,
        Stage::Explain,
        Stage::Stats,
        Stage::Repr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Mine => "mine",
            Stage::Classify => "classify",
            Stage::Metrics => "metrics",
            Stage::Entropy => "entropy",
            Stage::Assemble => "assemble",
            Stage::Split => "split",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Mcnemar => "mcnemar",
            Stage::Explain => "explain",
            Stage::Stats => "stats",
            Stage::Repr => "repr",
        }
    }
}

/// Artifact file names, in manifest order. Model and explanation files
/// are listed after these.
pub const ARTIFACTS: [&str; 20] = [
    "commits.jsonl",
    "releases.json",
    "labels.jsonl",
    "product_metrics.csv",
    "process_metrics.csv",
    "methods.jsonl",
    "ngram.txt",
    "entropy.csv",
    "dataset.csv",
    "assemble_report.json",
    "train.csv",
    "test.csv",
    "predictions.csv",
    "eval_report.json",
    "eval_report.txt",
    "mcnemar.json",
    "stats.json",
    "repr_report.json",
    "projection.csv",
    "config.toml",
];

const MODEL_KINDS: [&str; 4] = [
    "random_forest",
    "gradient_boosting",
    "isolation_forest",
    "local_outlier_factor",
];
const EXPLAINED: [&str; 2] = ["random_forest", "gradient_boosting"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: Stage,
    pub skipped: bool,
}

#[derive(Serialize, Deserialize)]
struct Stamped<T> {
    provenance: Provenance,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize, Deserialize)]
struct Releases {
    releases: BTreeMap<String, ReleaseInfo>,
}

#[derive(Serialize, Deserialize)]
struct Pairs {
    pairs: Vec<super::modeling::McNemarPair>,
}

#[derive(Serialize, Deserialize)]
struct Stats {
    groups: Vec<StatsEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    artifacts: Vec<ManifestEntry>,
}

/// One configured pipeline bound to its output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub cfg: PipelineConfig,
    prov: Provenance,
}

/// Token-length histogram bin width used by the stats stage.
const HISTOGRAM_BIN: usize = 25;

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let prov = Provenance::new(cfg.seed, &cfg.hash());
        Ok(Pipeline { cfg, prov })
    }

    pub fn out(&self) -> &Path {
        &self.cfg.out
    }

    pub fn provenance(&self) -> &Provenance {
        &self.prov
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn keywords(&self) -> Result<KeywordSet> {
        KeywordSet::new(&self.cfg.keywords)
    }

    fn stamped<T: Serialize>(&self, body: T) -> Stamped<T> {
        Stamped {
            provenance: self.prov.clone(),
            body,
        }
    }

    fn read_dataset(&self, name: &str) -> Result<Dataset> {
        Dataset::from_table(&Table::read(&self.path(name))?)
    }

    fn read_models(&self) -> Result<Vec<ModelFile>> {
        let mut out = Vec::new();
        for kind in MODEL_KINDS {
            let p = self.path(&format!("models/{kind}.json"));
            if p.exists() {
                out.push(ModelFile::from_json(&read_text(&p)?)?);
            }
        }
        if out.is_empty() {
            return Err(Error::input(format!(
                "no models under {}; run `train` first",
                self.path("models").display()
            )));
        }
        Ok(out)
    }

    /// Run one stage unconditionally.
    pub fn run_stage(&self, stage: Stage) -> Result<()> {
        info!("stage {}", stage.name());
        fs::create_dir_all(self.out()).map_err(|e| Error::io(self.out(), e))?;
        match stage {
            Stage::Mine => {
                if self.cfg.repos.is_empty() {
                    return Err(Error::input("no repositories configured"));
                }
                let mined = mine_repos(&self.cfg.repos, &self.keywords()?)?;
                write_jsonl(&self.path("commits.jsonl"), &mined.commits)?;
                write_json(
                    &self.path("releases.json"),
                    &self.stamped(Releases {
                        releases: mined.releases,
                    }),
                )?;
            }
            Stage::Classify => {
                let commits: Vec<CommitRecord> = read_jsonl(&self.path("commits.jsonl"))?;
                let releases: Stamped<Releases> = read_json(&self.path("releases.json"))?;
                let labels = classify_commits(&commits, &releases.body.releases, &self.cfg.repos)?;
                write_jsonl(&self.path("labels.jsonl"), &labels)?;
            }
            Stage::Metrics => {
                let commits: Vec<CommitRecord> = read_jsonl(&self.path("commits.jsonl"))?;
                let repos = repo_paths(&self.cfg.repos);
                let keywords = self.keywords()?;
                let per_commit = commits
                    .par_iter()
                    .map(|c| {
                        let repo = repos.get(&c.repo_id).ok_or_else(|| {
                            Error::input(format!("repository {} is not configured", c.repo_id))
                        })?;
                        fault_metrics(repo, c, &keywords)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let rows: Vec<_> = per_commit.into_iter().flatten().collect();
                product_table(&rows, &self.prov).write(&self.path("product_metrics.csv"))?;
                process_table(&rows, &self.prov).write(&self.path("process_metrics.csv"))?;
                let methods: Vec<&FaultMethod> = rows.iter().map(|r| &r.method).collect();
                write_jsonl(&self.path("methods.jsonl"), &methods)?;
            }
            Stage::Entropy => {
                let faults: Vec<FaultMethod> = read_jsonl(&self.path("methods.jsonl"))?;
                let mut corpus = Vec::new();
                for p in &self.cfg.entropy.corpus {
                    corpus.push(read_text(p)?);
                }
                corpus.extend(default_corpus(&repo_paths(&self.cfg.repos), &faults)?);
                if corpus.is_empty() {
                    return Err(Error::input(
                        "entropy corpus is empty: no non-fault files and no configured corpus",
                    ));
                }
                let model = train_entropy_model(&corpus, self.cfg.entropy.order, self.cfg.entropy.k)?;
                write_atomic(&self.path("ngram.txt"), model.to_text().as_bytes())?;
                entropy_table(&model, &faults, &self.prov).write(&self.path("entropy.csv"))?;
            }
            Stage::Assemble => {
                let labels: Vec<LabelRecord> = read_jsonl(&self.path("labels.jsonl"))?;
                let (dataset, report) = assemble_dataset(
                    &labels,
                    &Table::read(&self.path("product_metrics.csv"))?,
                    &Table::read(&self.path("process_metrics.csv"))?,
                    &Table::read(&self.path("entropy.csv"))?,
                    self.cfg.include_unknown,
                    self.cfg.zero_fill_missing,
                )?;
                dataset.to_table(&self.prov).write(&self.path("dataset.csv"))?;
                write_json(&self.path("assemble_report.json"), &self.stamped(report))?;
            }
            Stage::Split => {
                let dataset = self.read_dataset("dataset.csv")?;
                let (train, test) = split_dataset(&dataset, self.cfg.split_ratio, self.cfg.seed)?;
                train.to_table(&self.prov).write(&self.path("train.csv"))?;
                test.to_table(&self.prov).write(&self.path("test.csv"))?;
            }
            Stage::Train => {
                let train = self.read_dataset("train.csv")?;
                for m in train_models(&train, &self.cfg)? {
                    let p = self.path(&format!("models/{}.json", m.header.model_type));
                    write_atomic(&p, (m.to_json()? + "\n").as_bytes())?;
                }
            }
            Stage::Evaluate => {
                let test = self.read_dataset("test.csv")?;
                let models = self.read_models()?;
                let (report, preds) = evaluate_models(&models, &test, &self.cfg, &self.prov)?;
                preds.write(&self.path("predictions.csv"))?;
                write_json(&self.path("eval_report.json"), &report)?;
                write_atomic(&self.path("eval_report.txt"), report.to_text().as_bytes())?;
            }
            Stage::Mcnemar => {
                let preds = Table::read(&self.path("predictions.csv"))?;
                let pairs = mcnemar_all(&preds)?;
                write_json(&self.path("mcnemar.json"), &self.stamped(Pairs { pairs }))?;
            }
            Stage::Explain => {
                let train = self.read_dataset("train.csv")?;
                let test = self.read_dataset("test.csv")?;
                for m in self.read_models()?.iter().filter(|m| m.model.is_supervised()) {
                    let report = explain_model(m, &train, &test, &self.cfg)?;
                    let kind = &m.header.model_type;
                    write_json(&self.path(&format!("explain_{kind}.json")), &self.stamped(&report))?;
                    write_atomic(
                        &self.path(&format!("explain_{kind}.txt")),
                        report.to_text(self.cfg.explain.top).as_bytes(),
                    )?;
                }
            }
            Stage::Stats => {
                let train = self.read_dataset("train.csv")?;
                let test = self.read_dataset("test.csv")?;
                let faults: Vec<FaultMethod> = read_jsonl(&self.path("methods.jsonl"))?;
                let sources: HashMap<String, String> = faults
                    .into_iter()
                    .map(|f| (format!("{}@{}:{}", f.repo_id, f.commit_id, f.method), f.source))
                    .collect();
                let groups = stats_report(&train, &test, &sources, HISTOGRAM_BIN);
                write_json(&self.path("stats.json"), &self.stamped(Stats { groups }))?;
            }
            Stage::Repr => {
                let emb = self.cfg.repr.embeddings.as_ref().ok_or_else(|| {
                    Error::input("no embeddings file configured (repr.embeddings)")
                })?;
                let dataset = self.read_dataset("dataset.csv")?;
                let (report, points) = repr_analysis(&dataset, emb, self.cfg.repr.variance_threshold)?;
                write_json(&self.path("repr_report.json"), &self.stamped(report))?;
                write_projection_csv(&self.path("projection.csv"), &points)?;
            }
        }
        Ok(())
    }

    fn inputs(&self, stage: Stage) -> Vec<PathBuf> {
        let files: &[&str] = match stage {
            Stage::Mine => &[],
            Stage::Classify => &["commits.jsonl", "releases.json"],
            Stage::Metrics => &["commits.jsonl"],
            Stage::Entropy => &["methods.jsonl"],
            Stage::Assemble => &["labels.jsonl", "product_metrics.csv", "process_metrics.csv", "entropy.csv"],
            Stage::Split => &["dataset.csv"],
            Stage::Train => &["train.csv"],
            Stage::Evaluate => &["test.csv"],
            Stage::Mcnemar => &["predictions.csv"],
            Stage::Explain | Stage::Stats => &["train.csv", "test.csv"],
            Stage::Repr => &["dataset.csv"],
        };
        let mut out: Vec<PathBuf> = files.iter().map(|f| self.path(f)).collect();
        match stage {
            Stage::Classify => {
                for r in &self.cfg.repos {
                    out.extend(r.issues.iter().cloned());
                    out.extend(r.contributors.iter().cloned());
                }
            }
            Stage::Entropy => out.extend(self.cfg.entropy.corpus.iter().cloned()),
            Stage::Evaluate | Stage::Explain => out.extend(self.model_paths()),
            Stage::Stats => out.push(self.path("methods.jsonl")),
            Stage::Repr => out.extend(self.cfg.repr.embeddings.iter().cloned()),
            _ => {}
        }
        out
    }

    fn model_paths(&self) -> Vec<PathBuf> {
        MODEL_KINDS
            .iter()
            .map(|k| self.path(&format!("models/{k}.json")))
            .collect()
    }

    fn outputs(&self, stage: Stage) -> Vec<PathBuf> {
        let files: &[&str] = match stage {
            Stage::Mine => &["commits.jsonl", "releases.json"],
            Stage::Classify => &["labels.jsonl"],
            Stage::Metrics => &["product_metrics.csv", "process_metrics.csv", "methods.jsonl"],
            Stage::Entropy => &["ngram.txt", "entropy.csv"],
            Stage::Assemble => &["dataset.csv", "assemble_report.json"],
            Stage::Split => &["train.csv", "test.csv"],
            Stage::Train => return self.model_paths(),
            Stage::Evaluate => &["predictions.csv", "eval_report.json", "eval_report.txt"],
            Stage::Mcnemar => &["mcnemar.json"],
            Stage::Explain => {
                return EXPLAINED
                    .iter()
                    .flat_map(|k| {
                        [
                            self.path(&format!("explain_{k}.json")),
                            self.path(&format!("explain_{k}.txt")),
                        ]
                    })
                    .collect()
            }
            Stage::Stats => &["stats.json"],
            Stage::Repr => &["repr_report.json", "projection.csv"],
        };
        files.iter().map(|f| self.path(f)).collect()
    }

    /// Repository state the stage reads directly: HEAD and tags.
    fn repo_fingerprint(&self) -> Result<String> {
        let mut s = String::new();
        for r in &self.cfg.repos {
            s.push_str(&run_git(&r.path, &["rev-parse", "HEAD"])?);
            s.push_str(&run_git(
                &r.path,
                &["for-each-ref", "--format=%(objectname) %(refname) %(creatordate:unix)", "refs/tags"],
            )?);
        }
        Ok(s)
    }

    fn stage_key(&self, stage: Stage) -> Result<String> {
        let mut material = format!(
            "{}\n{}\n{}\n{}\n",
            stage.name(),
            self.prov.seed,
            self.prov.config_hash,
            self.prov.tool_version
        );
        for p in self.inputs(stage) {
            let digest = match fs::read(&p) {
                Ok(bytes) => sha256_hex(&bytes),
                Err(_) => "missing".to_string(),
            };
            material.push_str(&format!("{}\t{digest}\n", p.display()));
        }
        if matches!(stage, Stage::Mine | Stage::Metrics | Stage::Entropy) {
            material.push_str(&self.repo_fingerprint()?);
        }
        Ok(sha256_hex(material.as_bytes()))
    }

    fn stamp_path(&self, stage: Stage) -> PathBuf {
        self.path(&format!(".stamps/{}", stage.name()))
    }

    /// Run every stage in order, skipping stages whose inputs, config and
    /// outputs are unchanged since their last successful run. The repr stage
    /// runs only when embeddings are configured. Artifacts of failed stages
    /// are left in place.
    pub fn run(&self) -> Result<Vec<StageOutcome>> {
        fs::create_dir_all(self.out()).map_err(|e| Error::io(self.out(), e))?;
        write_atomic(&self.path("config.toml"), self.cfg.to_toml().as_bytes())?;
        let mut outcomes = Vec::new();
        for stage in Stage::ALL {
            if stage == Stage::Repr && self.cfg.repr.embeddings.is_none() {
                continue;
            }
            let key = self.stage_key(stage)?;
            let stamp = self.stamp_path(stage);
            let fresh = fs::read_to_string(&stamp).is_ok_and(|s| s.trim() == key)
                && self.outputs(stage).iter().all(|p| p.exists());
            if fresh {
                info!("stage {} is up to date", stage.name());
            } else {
                self.run_stage(stage)?;
                if stage == Stage::Split {
                    let train = self.read_dataset("train.csv")?;
                    let test = self.read_dataset("test.csv")?;
                    super::dataset::assert_no_leakage(&train, &test)?;
                }
                write_atomic(&stamp, format!("{key}\n").as_bytes())?;
            }
            outcomes.push(StageOutcome {
                stage,
                skipped: fresh,
            });
        }
        self.write_manifest()?;
        Ok(outcomes)
    }

    /// Record every present artifact with its digest.
    pub fn write_manifest(&self) -> Result<()> {
        let mut names: Vec<String> = ARTIFACTS.iter().map(|s| s.to_string()).collect();
        names.extend(MODEL_KINDS.iter().map(|k| format!("models/{k}.json")));
        for k in EXPLAINED {
            names.push(format!("explain_{k}.json"));
            names.push(format!("explain_{k}.txt"));
        }
        let mut artifacts = Vec::new();
        for name in names {
            if let Ok(bytes) = fs::read(self.path(&name)) {
                artifacts.push(ManifestEntry {
                    path: name,
                    sha256: sha256_hex(&bytes),
                });
            }
        }
        write_json(&self.path("manifest.json"), &self.stamped(Manifest { artifacts }))
    }
}

/// Parse an n-gram model written by the entropy stage.
pub fn read_ngram(path: &Path) -> Result<NgramModel> {
    NgramModel::from_text(&read_text(path)?)
}
