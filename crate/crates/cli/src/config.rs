//! Experiment configuration (TOML, schema version 1).
//!
//! Every field has a default except `kind` and, for CV experiments, the
//! `[target]` table. [`ExperimentConfig::resolve`] materializes the derived
//! defaults so the written echo re-runs the experiment unchanged.

use std::path::{Path, PathBuf};

use prognet_core::data::{NormalizationMode, Stratification, SynthConfig, TaskLabel};
use prognet_core::nn::Hyperparams;
use prognet_core::prognet::Wiring;
use prognet_core::transfer::{StrategyKind, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Allowed values for `train_fold_subset`.
pub const TRAIN_FOLD_SUBSETS: [usize; 4] = [1, 2, 4, 8];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Source and target tasks on the same corpus (e.g. speaker → emotion).
    ParalinguisticTransfer,
    /// Same task on two corpora.
    CrossDataset,
    /// Any CV experiment run for its learning curves.
    LearningCurve,
    /// Only writes a synthetic corpus pair.
    SynthGenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthPart {
    Source,
    Target,
}

/// Where a corpus comes from and which label is predicted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Half of the generated `[synth]` pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthPart>,
    pub task: TaskLabel,
}

impl DataSpec {
    /// Both specs name the same corpus.
    pub fn same_corpus(&self, other: &DataSpec) -> bool {
        self.path == other.path && self.synth == other.synth
    }
}

fn ten() -> usize {
    10
}

fn yes() -> bool {
    true
}

fn default_strategies() -> Vec<StrategyKind> {
    vec![StrategyKind::Baseline, StrategyKind::Ptft, StrategyKind::Prognet]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub base_seed: u64,
    /// Seed of the synthetic generator; defaults to `base_seed`.
    #[serde(default)]
    pub synth_seed: Option<u64>,
    #[serde(default = "ten")]
    pub iterations: usize,
    #[serde(default = "ten")]
    pub k: usize,
    /// Number of training folds sampled per CV step; unset uses all `k − 2`.
    #[serde(default)]
    pub train_fold_subset: Option<usize>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategyKind>,
    #[serde(default = "ten")]
    pub df: usize,
    /// Defaults to `1 / training folds`.
    #[serde(default)]
    pub train_test_ratio: Option<f64>,
    #[serde(default)]
    pub stratification: Stratification,
    #[serde(default)]
    pub normalization: NormalizationMode,
    #[serde(default)]
    pub patience: Option<usize>,
    #[serde(default = "yes")]
    pub pad_curves: bool,
    #[serde(default)]
    pub save_models: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub target: Option<DataSpec>,
    #[serde(default)]
    pub source: Option<DataSpec>,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    #[serde(default)]
    pub wiring: Wiring,
    #[serde(default)]
    pub synth: Option<SynthConfig>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub train_folds: Option<usize>,
    pub epochs: Option<usize>,
    pub strategies: Vec<StrategyKind>,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file; relative data paths are taken relative to it.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for spec in [cfg.target.as_mut(), cfg.source.as_mut()].into_iter().flatten() {
            if let Some(p) = spec.path.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
                *p = std::path::absolute(&*p).unwrap_or_else(|_| p.clone());
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Applies overrides, fills derived defaults and validates.
    pub fn resolve(mut self, o: &Overrides) -> Result<Self, CliError> {
        if let Some(seed) = o.seed {
            self.base_seed = seed;
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = dir.clone();
        }
        if let Some(n) = o.train_folds {
            self.train_fold_subset = Some(n);
            // A fixed ratio from the file would not follow the new subset.
            self.train_test_ratio = None;
        }
        if let Some(e) = o.epochs {
            self.hyperparams.max_epochs = e;
        }
        if !o.strategies.is_empty() {
            self.strategies = o.strategies.clone();
        }
        if self.synth.is_some() && self.synth_seed.is_none() {
            self.synth_seed = Some(self.base_seed);
        }
        if self.kind == ExperimentKind::ParalinguisticTransfer {
            if let (Some(target), Some(source)) = (&self.target, self.source.as_mut()) {
                if source.path.is_none() && source.synth.is_none() {
                    source.path = target.path.clone();
                    source.synth = target.synth;
                }
            }
        }
        self.validate()?;
        if self.kind != ExperimentKind::SynthGenerate && self.train_test_ratio.is_none() {
            self.train_test_ratio = Some(1.0 / self.train_folds() as f64);
        }
        Ok(self)
    }

    pub fn train_folds(&self) -> usize {
        self.train_fold_subset.unwrap_or(self.k.saturating_sub(2))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hyperparams: self.hyperparams.clone(),
            patience: self.patience,
            wiring: self.wiring,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return config_err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if let Some(s) = &self.synth {
            s.validate()?;
        }
        if self.kind == ExperimentKind::SynthGenerate {
            return match self.synth {
                Some(_) => Ok(()),
                None => config_err("synth_generate needs a [synth] table"),
            };
        }
        self.train_config().validate()?;
        if self.iterations == 0 {
            return config_err("iterations must be >= 1");
        }
        if self.k < 3 {
            return config_err(format!("k must be >= 3, got {}", self.k));
        }
        if self.df == 0 {
            return config_err("df must be >= 1");
        }
        if let Some(r) = self.train_test_ratio {
            if !(r >= 0.0 && r.is_finite()) {
                return config_err(format!("train_test_ratio {r} must be finite and >= 0"));
            }
        }
        if let Some(n) = self.train_fold_subset {
            if !TRAIN_FOLD_SUBSETS.contains(&n) {
                return config_err(format!("train_fold_subset must be one of 1, 2, 4, 8; got {n}"));
            }
            if n > self.k - 2 {
                return config_err(format!("train_fold_subset {n} exceeds the {} available folds", self.k - 2));
            }
        }
        if self.strategies.is_empty() {
            return config_err("strategy list is empty");
        }
        let mut seen = self.strategies.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.strategies.len() {
            return config_err("strategy list contains duplicates");
        }
        let Some(target) = &self.target else {
            return config_err("missing [target] table");
        };
        self.check_spec("target", target)?;
        let needs_source = self.strategies.iter().any(|s| s.needs_source());
        match (&self.source, needs_source) {
            (None, true) => return config_err("transfer strategies need a [source] table"),
            (Some(source), _) => self.check_spec("source", source)?,
            (None, false) => {}
        }
        if self.kind == ExperimentKind::CrossDataset {
            if let Some(source) = &self.source {
                if source.same_corpus(target) {
                    return config_err("cross_dataset needs distinct source and target corpora");
                }
            }
        }
        Ok(())
    }

    fn check_spec(&self, role: &str, spec: &DataSpec) -> Result<(), CliError> {
        match (&spec.path, spec.synth) {
            (Some(_), None) => Ok(()),
            (None, Some(_)) if self.synth.is_some() => Ok(()),
            (None, Some(_)) => config_err(format!("[{role}] uses synth data but there is no [synth] table")),
            (Some(_), Some(_)) => config_err(format!("[{role}] sets both path and synth")),
            (None, None) => config_err(format!("[{role}] needs a path or synth")),
        }
    }
}
