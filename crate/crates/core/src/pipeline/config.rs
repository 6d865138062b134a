use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::learners::{BoostConfig, ForestConfig, IsolationConfig};
use crate::mining::DEFAULT_KEYWORDS;
use crate::naturalness::{DEFAULT_K, DEFAULT_ORDER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepoConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub issues: Option<PathBuf>,
    #[serde(default)]
    pub contributors: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyConfig {
    pub order: usize,
    pub k: f64,
    /// Extra training files; the default corpus is every non-fault Python
    /// file of the mined repositories at HEAD.
    pub corpus: Vec<PathBuf>,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        EntropyConfig {
            order: DEFAULT_ORDER,
            k: DEFAULT_K,
            corpus: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestSection {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for ForestSection {
    fn default() -> Self {
        let d = ForestConfig::default();
        ForestSection {
            n_trees: d.n_trees,
            max_depth: d.max_depth,
            min_samples_leaf: d.min_leaf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostSection {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub subsample: f64,
}

impl Default for BoostSection {
    fn default() -> Self {
        let d = BoostConfig::default();
        BoostSection {
            n_rounds: d.n_rounds,
            learning_rate: d.learning_rate,
            max_depth: d.max_depth,
            subsample: d.subsample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsolationSection {
    pub n_trees: usize,
    pub subsample: usize,
    pub contamination: f64,
}

impl Default for IsolationSection {
    fn default() -> Self {
        let d = IsolationConfig::default();
        IsolationSection {
            n_trees: d.n_trees,
            subsample: d.subsample,
            contamination: d.contamination,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LofSection {
    pub k: usize,
}

impl Default for LofSection {
    fn default() -> Self {
        LofSection { k: 20 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    pub random_forest: ForestSection,
    pub gradient_boosting: BoostSection,
    pub isolation_forest: IsolationSection,
    pub local_outlier_factor: LofSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub bootstrap: usize,
    pub level: f64,
    pub threshold: f64,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            bootstrap: 1000,
            level: 0.95,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    pub shapley_samples: usize,
    /// Background rows drawn from the training split.
    pub background: usize,
    pub permutation_repeats: usize,
    pub top: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            shapley_samples: 200,
            background: 50,
            permutation_repeats: 5,
            top: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReprConfig {
    /// CSV with an id column and one column per embedding dimension.
    pub embeddings: Option<PathBuf>,
    pub variance_threshold: f64,
}

impl Default for ReprConfig {
    fn default() -> Self {
        ReprConfig {
            embeddings: None,
            variance_threshold: 0.95,
        }
    }
}

/// Everything a pipeline run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub split_ratio: f64,
    pub keywords: Vec<String>,
    /// Keep Unknown-labeled rows in the dataset (label -1).
    pub include_unknown: bool,
    /// Zero-fill missing process metrics or ENT instead of dropping the row.
    pub zero_fill_missing: bool,
    pub repos: Vec<RepoConfig>,
    pub entropy: EntropyConfig,
    pub models: ModelsConfig,
    pub evaluate: EvaluateConfig,
    pub explain: ExplainConfig,
    pub repr: ReprConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            out: PathBuf::from("out"),
            split_ratio: 0.9,
            keywords: DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect(),
            include_unknown: false,
            zero_fill_missing: false,
            repos: Vec::new(),
            entropy: EntropyConfig::default(),
            models: ModelsConfig::default(),
            evaluate: EvaluateConfig::default(),
            explain: ExplainConfig::default(),
            repr: ReprConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Parse TOML. Relative repository, issue, corpus and embedding paths
    /// are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::input(format!("config: {e}")))?;
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for r in &mut cfg.repos {
            fix(&mut r.path);
            r.issues.as_mut().map(fix);
            r.contributors.as_mut().map(fix);
        }
        cfg.entropy.corpus.iter_mut().for_each(fix);
        cfg.repr.embeddings.as_mut().map(fix);
        fix(&mut cfg.out);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::input(format!(
                "split_ratio must be in (0,1), got {}",
                self.split_ratio
            )));
        }
        if self.keywords.iter().all(|k| k.trim().is_empty()) {
            return Err(Error::input("keyword list is empty"));
        }
        if !(1..=5).contains(&self.entropy.order) {
            return Err(Error::input("entropy.order must be in 1..=5"));
        }
        if !(self.evaluate.level > 0.0 && self.evaluate.level < 1.0) {
            return Err(Error::input("evaluate.level must be in (0,1)"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, minus the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = PathBuf::new();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn forest(&self) -> ForestConfig {
        let s = &self.models.random_forest;
        ForestConfig {
            n_trees: s.n_trees,
            max_depth: s.max_depth,
            min_leaf: s.min_samples_leaf,
            seed: self.seed,
            ..ForestConfig::default()
        }
    }

    pub fn boost(&self) -> BoostConfig {
        let s = &self.models.gradient_boosting;
        BoostConfig {
            n_rounds: s.n_rounds,
            learning_rate: s.learning_rate,
            max_depth: s.max_depth,
            subsample: s.subsample,
            seed: self.seed,
            ..BoostConfig::default()
        }
    }

    pub fn isolation(&self) -> IsolationConfig {
        let s = &self.models.isolation_forest;
        IsolationConfig {
            n_trees: s.n_trees,
            subsample: s.subsample,
            contamination: s.contamination,
            seed: self.seed,
        }
    }
}
