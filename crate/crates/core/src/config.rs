//! Declarative run configuration, read from a TOML file.
//!
//! ```toml
//! language = "eu"
//! seed = 7
//!
//! [paths]
//! kb_dir = "kb"
//! corpus = ["corpus.txt"]
//! gold = ["rg.tsv"]
//! output = "out"
//!
//! [walk]
//! alpha = 0.85
//! walks_per_lexicalization = 1358
//!
//! [train.text]
//! dim = 300
//! ```
//!
//! Relative paths resolve against the directory holding the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::HybridWeights;
use crate::dataset::PairCaps;
use crate::embedding::TrainConfig;
use crate::features::{FeatureOptions, PndScope};
use crate::kb::DepthRule;
use crate::walker::{WalkBudget, WalkConfig, DEFAULT_WALKS_PER_LEXICALIZATION};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub language: String,
    /// Master seed; every stochastic stage derives its seed from it.
    pub seed: u64,
    /// Threads per stage; 0 uses every core.
    pub workers: usize,
    pub paths: PathsSection,
    pub corpus: CorpusSection,
    pub walk: WalkSection,
    pub train: TrainSections,
    pub align: AlignSection,
    pub features: FeaturesSection,
    pub pairs: PairsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    /// Directory with synsets.tsv, relations.tsv and lexicon.tsv.
    pub kb_dir: PathBuf,
    /// Raw text files, concatenated in order.
    pub corpus: Vec<PathBuf>,
    /// Gold word-similarity files.
    pub gold: Vec<PathBuf>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub lowercase: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSection {
    pub alpha: f64,
    /// Total walks; overrides `walks_per_lexicalization` when set.
    pub n_walks: Option<u64>,
    pub walks_per_lexicalization: f64,
    pub min_tokens_per_walk: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSections {
    pub text: TrainSection,
    pub kb: TrainSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: u64,
    pub subsample: f64,
    pub subwords: bool,
    pub min_n: usize,
    pub max_n: usize,
    pub learning_rate: f64,
    /// Training threads. More than one trades run-to-run identity for speed.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignSection {
    pub text_weight: f64,
    pub kb_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    pub min_len: usize,
    /// "nouns" or "all".
    pub pnd_scope: String,
    /// "shortest" or "longest".
    pub depth_rule: String,
    pub iqr_k: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairsSection {
    pub max_pairs_per_signature: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            language: "und".into(),
            seed: 0,
            workers: 0,
            paths: PathsSection::default(),
            corpus: CorpusSection { lowercase: true },
            walk: WalkSection::default(),
            train: TrainSections::default(),
            align: AlignSection::default(),
            features: FeaturesSection::default(),
            pairs: PairsSection::default(),
        }
    }
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection { kb_dir: "kb".into(), corpus: Vec::new(), gold: Vec::new(), output: "out".into() }
    }
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection { lowercase: true }
    }
}

impl Default for WalkSection {
    fn default() -> Self {
        let w = WalkConfig::default();
        WalkSection {
            alpha: w.alpha,
            n_walks: None,
            walks_per_lexicalization: DEFAULT_WALKS_PER_LEXICALIZATION,
            min_tokens_per_walk: w.min_tokens_per_walk,
        }
    }
}

impl Default for TrainSections {
    fn default() -> Self {
        TrainSections {
            text: TrainSection::from(&TrainConfig::default()),
            kb: TrainSection::from(&TrainConfig::for_pseudo_corpus()),
        }
    }
}

impl From<&TrainConfig> for TrainSection {
    fn from(c: &TrainConfig) -> Self {
        let (min_n, max_n) = c.ngrams.unwrap_or((3, 6));
        TrainSection {
            dim: c.dim,
            window: c.window,
            negatives: c.negatives,
            epochs: c.epochs,
            min_count: c.min_count,
            subsample: c.subsample,
            subwords: c.ngrams.is_some(),
            min_n,
            max_n,
            learning_rate: c.learning_rate,
            workers: c.workers,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection::from(&TrainConfig::default())
    }
}

impl Default for AlignSection {
    fn default() -> Self {
        let w = HybridWeights::default();
        AlignSection { text_weight: w.text, kb_weight: w.kb }
    }
}

impl Default for FeaturesSection {
    fn default() -> Self {
        FeaturesSection { min_len: 3, pnd_scope: "nouns".into(), depth_rule: "shortest".into(), iqr_k: 1.5 }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            min_count: self.min_count,
            subsample: self.subsample,
            ngrams: self.subwords.then_some((self.min_n, self.max_n)),
            learning_rate: self.learning_rate,
            seed,
            workers: self.workers,
        }
    }
}

/// Stage seeds derived from the master seed.
pub mod seeds {
    pub const WALK: u64 = 0;
    pub const TRAIN_TEXT: u64 = 1;
    pub const TRAIN_KB: u64 = 2;
    pub const PAIRS: u64 = 3;
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<RunConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), message: e.to_string() })
    }

    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let mut cfg = RunConfig::from_toml(&text, &path.display().to_string())?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.kb_dir);
        fix(&mut self.paths.output);
        self.paths.corpus.iter_mut().for_each(fix);
        self.paths.gold.iter_mut().for_each(fix);
    }

    /// Seed for one stochastic stage.
    pub fn stage_seed(&self, stage: u64) -> u64 {
        self.seed.wrapping_add(stage.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            alpha: self.walk.alpha,
            budget: match self.walk.n_walks {
                Some(n) => WalkBudget::Total(n),
                None => WalkBudget::PerLexicalization(self.walk.walks_per_lexicalization),
            },
            seed: self.stage_seed(seeds::WALK),
            min_tokens_per_walk: self.walk.min_tokens_per_walk,
        }
    }

    pub fn text_train_config(&self) -> TrainConfig {
        self.train.text.to_train_config(self.stage_seed(seeds::TRAIN_TEXT))
    }

    pub fn kb_train_config(&self) -> TrainConfig {
        self.train.kb.to_train_config(self.stage_seed(seeds::TRAIN_KB))
    }

    pub fn hybrid_weights(&self) -> HybridWeights {
        HybridWeights { text: self.align.text_weight, kb: self.align.kb_weight }
    }

    pub fn feature_options(&self) -> Result<FeatureOptions, ConfigError> {
        let pnd_scope = match self.features.pnd_scope.as_str() {
            "nouns" => PndScope::Nouns,
            "all" => PndScope::AllPos,
            other => return Err(ConfigError::Invalid(format!("features.pnd_scope must be nouns or all, got {other:?}"))),
        };
        let depth_rule = match self.features.depth_rule.as_str() {
            "shortest" => DepthRule::Shortest,
            "longest" => DepthRule::Longest,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "features.depth_rule must be shortest or longest, got {other:?}"
                )))
            }
        };
        Ok(FeatureOptions { min_len: self.features.min_len, pnd_scope, depth_rule })
    }

    pub fn pair_caps(&self) -> Option<PairCaps> {
        self.pairs
            .max_pairs_per_signature
            .map(|max| PairCaps { max_pairs_per_signature: max, seed: self.stage_seed(seeds::PAIRS) })
    }

    /// Checks every value that does not depend on the input files.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.walk_config().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for (name, t) in [("text", self.text_train_config()), ("kb", self.kb_train_config())] {
            t.validate().map_err(|e| ConfigError::Invalid(format!("train.{name}: {e}")))?;
        }
        if self.train.text.dim != self.train.kb.dim {
            return invalid(format!(
                "train.text.dim ({}) and train.kb.dim ({}) must match for alignment",
                self.train.text.dim, self.train.kb.dim
            ));
        }
        let w = self.hybrid_weights();
        if !(w.text >= 0.0 && w.kb >= 0.0 && w.text + w.kb > 0.0) {
            return invalid("align weights must be non-negative and not both zero".into());
        }
        self.feature_options()?;
        if self.features.min_len == 0 {
            return invalid("features.min_len must be at least 1".into());
        }
        if !(self.features.iqr_k >= 0.0 && self.features.iqr_k.is_finite()) {
            return invalid(format!("features.iqr_k must be non-negative, got {}", self.features.iqr_k));
        }
        if self.pairs.max_pairs_per_signature == Some(0) {
            return invalid("pairs.max_pairs_per_signature must be positive".into());
        }
        Ok(())
    }
}
