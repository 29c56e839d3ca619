//! The experiment configuration file.
//!
//! One TOML document drives every CLI command. Every field has a default,
//! so an empty file is a valid desk-scale configuration; unknown keys are
//! rejected. [`CliConfig::validate`] reports the dotted path of the first
//! offending field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attacks::AttackConfig;
use crate::datasets::{RemovalMode, SyntheticSpec};
use crate::nn::TrainConfig;
use crate::objectives::ObjectiveConfig;
use crate::profiler::{MinPerturbationConfig, StabilitySource};
use crate::{Error, Result};

/// Environment variable naming the config file used when `--config` is
/// absent.
pub const CONFIG_ENV: &str = "ROBUSTDATA_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub synthetic: SyntheticSpec,
    pub split: SplitConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub objective: ObjectiveConfig,
    /// Attack used for per-epoch test evaluation and stability profiling.
    pub eval_attack: AttackConfig,
    pub profile: ProfileConfig,
    pub experiment: ExperimentConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("runs"),
            synthetic: SyntheticSpec::default(),
            split: SplitConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            objective: ObjectiveConfig::default(),
            eval_attack: AttackConfig::default(),
            profile: ProfileConfig::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub test_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { test_fraction: 1.0 / 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden: vec![64, 64] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    /// Record per-example dynamics during training.
    pub enabled: bool,
    pub source: StabilitySource,
    pub min_perturbation: MinPerturbationConfig,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            source: StabilitySource::PostEpoch,
            min_perturbation: MinPerturbationConfig::default(),
        }
    }
}

/// Evaluators applied to a finished model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluatorConfig {
    /// Restarts of the multi-restart PGD evaluator.
    pub restarts: usize,
    pub square_queries: usize,
    /// Iterations of the long PGD evaluator; 0 disables it.
    pub long_iterations: usize,
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            square_queries: 500,
            long_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub fractions: Vec<f64>,
    pub modes: Vec<RemovalMode>,
    pub seeds: Vec<u64>,
    /// Seeds of the profiling runs whose stability ranks are ensembled.
    pub ranking_seeds: Vec<u64>,
    /// Remove the same fraction from every class instead of globally.
    pub classwise: bool,
    pub evaluators: EvaluatorConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            fractions: vec![0.0, 0.2, 0.3, 0.6],
            modes: vec![RemovalMode::Random, RemovalMode::AscendingQuality],
            seeds: (0..5).collect(),
            ranking_seeds: vec![100, 101],
            classwise: false,
            evaluators: EvaluatorConfig::default(),
        }
    }
}

impl CliConfig {
    /// Parses TOML, naming the offending key path on failure.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.message().to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.synthetic.validate("synthetic")?;
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(Error::config("split.test_fraction", "must lie in (0, 1)"));
        }
        if let Some(i) = self.model.hidden.iter().position(|&w| w == 0) {
            return Err(Error::config(format!("model.hidden[{i}]"), "must be positive"));
        }
        self.train.validate("train")?;
        self.objective.validate("objective")?;
        self.eval_attack.validate("eval_attack")?;
        let mp = &self.profile.min_perturbation;
        if !(mp.step > 0.0) {
            return Err(Error::config("profile.min_perturbation.step", "must be positive"));
        }
        if !(mp.eps_max > 0.0 && mp.eps_max <= 1.0) {
            return Err(Error::config("profile.min_perturbation.eps_max", "must lie in (0, 1]"));
        }
        let ex = &self.experiment;
        if let Some(i) = ex.fractions.iter().position(|f| !(0.0..1.0).contains(f)) {
            return Err(Error::config(format!("experiment.fractions[{i}]"), "must lie in [0, 1)"));
        }
        if ex.fractions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("experiment.fractions", "must be strictly increasing"));
        }
        for (field, empty) in [
            ("experiment.fractions", ex.fractions.is_empty()),
            ("experiment.modes", ex.modes.is_empty()),
            ("experiment.seeds", ex.seeds.is_empty()),
            ("experiment.ranking_seeds", ex.ranking_seeds.is_empty()),
        ] {
            if empty {
                return Err(Error::config(field, "must not be empty"));
            }
        }
        if ex.evaluators.restarts == 0 {
            return Err(Error::config("experiment.evaluators.restarts", "must be positive"));
        }
        if ex.evaluators.square_queries == 0 {
            return Err(Error::config("experiment.evaluators.square_queries", "must be positive"));
        }
        Ok(())
    }

    /// Stable 64-bit FNV-1a digest of the canonical JSON form, printed as
    /// hex.
    pub fn digest(&self) -> String {
        digest_json(self)
    }
}

pub(crate) fn digest_json<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serialisable");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in json {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_desk_config_matches_defaults() {
        let c = CliConfig::from_toml(include_str!("../../../configs/desk.toml")).unwrap();
        assert_eq!(c, CliConfig::default());
    }

    #[test]
    fn empty_document_is_the_desk_default() {
        let c = CliConfig::from_toml("").unwrap();
        assert_eq!(c, CliConfig::default());
        assert_eq!(c.train.epochs, 40);
        assert_eq!(c.objective.attack.iterations, 7);
        assert_eq!(c.eval_attack.iterations, 10);
        assert_eq!(c.objective.lambda, 6.0);
        assert_eq!(c.model.hidden, vec![64, 64]);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = CliConfig::default();
        assert_eq!(CliConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("[train]\nbase_lr = -1.0\n", "train.base_lr"),
            ("[train]\nbogus = 1\n", "train"),
            ("[objective.attack]\nepsilon = 2.0\n", "objective.attack.epsilon"),
            ("[experiment]\nfractions = [0.0, 1.0]\n", "experiment.fractions[1]"),
            ("[experiment]\nmodes = [\"sideways\"]\n", "experiment.modes"),
            ("[split]\ntest_fraction = 0.0\n", "split.test_fraction"),
            ("[model]\nhidden = [8, 0]\n", "model.hidden[1]"),
            ("[train]\nepochs = \"many\"\n", "train.epochs"),
        ];
        for (text, field) in cases {
            let e = CliConfig::from_toml(text).unwrap_err();
            assert!(e.is_validation());
            assert!(e.to_string().contains(field), "{text:?}: {e}");
        }
    }

    #[test]
    fn synthetic_seed_is_not_configurable() {
        assert!(CliConfig::from_toml("[synthetic]\nseed = 3\n").is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = CliConfig::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.seed = 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 16);
    }
}
