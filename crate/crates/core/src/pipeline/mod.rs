//! The end-to-end workflow: stages, artifacts on disk, dataset assembly and
//! splitting, and the configuration that drives them.
//!
//! Every stage reads and writes files under one output directory. CSV
//! artifacts open with a provenance comment (seed, configuration hash, tool
//! version), JSON reports carry a `provenance` object, and `manifest.json`
//! records the provenance and SHA-256 of every artifact, JSONL included.

mod config;
mod dataset;
mod extract;
pub mod io;
mod mine;
mod modeling;
mod run;

pub use config::{
    BoostSection, EntropyConfig, EvaluateConfig, ExplainConfig, ForestSection, IsolationSection,
    LofSection, ModelsConfig, PipelineConfig, RepoConfig, ReprConfig,
};
pub use dataset::{
    assemble_dataset, assert_no_leakage, dataset_stats, split_dataset, statement_stats,
    stats_report, AssembleReport, Dataset, DatasetRow, LabelFilter, SplitFilter, StatementStats,
    StatsEntry, KEY_COLUMNS,
};
pub use extract::{
    default_corpus, entropy_table, fault_metrics, method_key, process_table, product_table,
    train_entropy_model, FaultMethod, FaultMetrics,
};
pub use io::{Provenance, Table};
pub use mine::{classify_commits, mine_repos, repo_paths, Mined};
pub use modeling::{
    evaluate_models, explain_model, mcnemar_all, mcnemar_pair, repr_analysis, train_models,
    EvalReport, McNemarPair, ModelEval,
};
pub use run::{read_ngram, Pipeline, Stage, StageOutcome, ARTIFACTS};
