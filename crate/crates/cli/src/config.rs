//! Experiment configuration: a versioned JSON file merged with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use imbf_core::learners::{ClassifierSpec, ForestParams, SvmParams, TreeParams};
use imbf_core::resampling::{SmoteConfig, SmoteKmeansConfig};
use imbf_core::{EnsembleSpec, Estimator, MissingPolicy, SamplerChoice, SchemaMode};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_MAX_MAJORITY: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SamplerKind {
    None,
    Smote,
    #[value(name = "smote_kmeans", alias = "smote-kmeans")]
    SmoteKmeans,
}

impl SamplerKind {
    fn name(self) -> &'static str {
        match self {
            SamplerKind::None => "none",
            SamplerKind::Smote => "smote",
            SamplerKind::SmoteKmeans => "smote_kmeans",
        }
    }

    fn default_choice(self) -> SamplerChoice {
        match self {
            SamplerKind::None => SamplerChoice::None,
            SamplerKind::Smote => SamplerChoice::Smote(SmoteConfig::default()),
            SamplerKind::SmoteKmeans => SamplerChoice::SmoteKmeans(SmoteKmeansConfig::default()),
        }
    }
}

/// Samplers and estimators crossed by `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareMatrix {
    pub samplers: Vec<SamplerChoice>,
    pub estimators: Vec<Estimator>,
}

impl Default for CompareMatrix {
    fn default() -> Self {
        CompareMatrix {
            samplers: vec![
                SamplerChoice::None,
                SamplerChoice::Smote(SmoteConfig::default()),
                SamplerChoice::SmoteKmeans(SmoteKmeansConfig::default()),
            ],
            estimators: vec![
                Estimator::Classifier(ClassifierSpec::DecisionTree(TreeParams::default())),
                Estimator::Classifier(ClassifierSpec::RandomForest(ForestParams::default())),
                Estimator::Classifier(ClassifierSpec::LinearSvm(SvmParams::default())),
                Estimator::Ensemble(EnsembleSpec::default()),
            ],
        }
    }
}

fn default_sampler() -> SamplerChoice {
    SamplerChoice::SmoteKmeans(SmoteKmeansConfig::default())
}

fn default_estimator() -> Estimator {
    Estimator::Ensemble(EnsembleSpec::default())
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_max_majority() -> Option<usize> {
    Some(DEFAULT_MAX_MAJORITY)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub schema: SchemaMode,
    #[serde(default)]
    pub missing: MissingPolicy,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerChoice,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Cap on majority rows kept for resample, train, evaluate and compare;
    /// `null` keeps everything.
    #[serde(default = "default_max_majority")]
    pub max_majority: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub compare: CompareMatrix,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            input: None,
            schema: SchemaMode::default(),
            missing: MissingPolicy::default(),
            sampler: default_sampler(),
            estimator: default_estimator(),
            folds: DEFAULT_FOLDS,
            seed: DEFAULT_SEED,
            max_majority: default_max_majority(),
            out: None,
            compare: CompareMatrix::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// Flag values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub schema: Option<SchemaMode>,
    pub sampler: Option<SamplerKind>,
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        // Check the version before field validation so old files get a clear message.
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigError(format!("config is not valid JSON: {e}")))?;
        match raw.get("version") {
            None => return Err(ConfigError("config is missing the required `version` key".into())),
            Some(v) if v.as_u64() != Some(u64::from(CONFIG_VERSION)) => {
                return Err(ConfigError(format!(
                    "unsupported config `version` {v}; expected {CONFIG_VERSION}"
                )))
            }
            Some(_) => {}
        }
        serde_json::from_value(raw).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    /// Applies flags on top of the file values. The seed flag already folds in
    /// the environment variable, so the order is flag, then env, then file.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.input {
            self.input = Some(p.clone());
        }
        if let Some(s) = o.schema {
            self.schema = s;
        }
        if let Some(kind) = o.sampler {
            if self.sampler.kind() != kind.name() {
                self.sampler = kind.default_choice();
            }
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(k) = o.folds {
            self.folds = k;
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let core = |e: imbf_core::Error| ConfigError(e.to_string());
        self.sampler.validate().map_err(core)?;
        self.estimator.validate().map_err(core)?;
        if self.folds < 2 {
            return Err(ConfigError(format!("`folds` must be at least 2, got {}", self.folds)));
        }
        if self.max_majority == Some(0) {
            return Err(ConfigError("`max_majority` must be positive or null".into()));
        }
        for s in &self.compare.samplers {
            s.validate().map_err(core)?;
        }
        for e in &self.compare.estimators {
            e.validate().map_err(core)?;
        }
        if self.compare.samplers.is_empty() || self.compare.estimators.is_empty() {
            return Err(ConfigError("`compare` needs at least one sampler and one estimator".into()));
        }
        Ok(())
    }

    pub fn input(&self) -> Result<&Path, ConfigError> {
        self.input
            .as_deref()
            .ok_or_else(|| ConfigError("no input file: pass --input or set `input` in the config".into()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("imbf-out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = ExperimentConfig::from_json(r#"{"version":1}"#).unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn version_is_required() {
        let e = ExperimentConfig::from_json(r#"{"seed":3}"#).unwrap_err();
        assert!(e.0.contains("version"));
        assert!(ExperimentConfig::from_json(r#"{"version":2}"#).is_err());
    }

    #[test]
    fn unknown_key_is_named() {
        let e = ExperimentConfig::from_json(r#"{"version":1,"fold":3}"#).unwrap_err();
        assert!(e.0.contains("fold"), "{}", e.0);
        let e = ExperimentConfig::from_json(
            r#"{"version":1,"estimator":{"classifier":{"kind":"gbt","params":{"rounds":3}}}}"#,
        )
        .unwrap_err();
        assert!(e.0.contains("rounds"), "{}", e.0);
    }

    #[test]
    fn flags_override_file() {
        let mut c = ExperimentConfig::from_json(
            r#"{"version":1,"seed":5,"folds":4,"sampler":{"kind":"smote","params":{"k_neighbors":3}}}"#,
        )
        .unwrap();
        c.apply(&Overrides {
            seed: Some(9),
            sampler: Some(SamplerKind::Smote),
            ..Overrides::default()
        });
        assert_eq!((c.seed, c.folds), (9, 4));
        assert!(matches!(&c.sampler, SamplerChoice::Smote(s) if s.k_neighbors == 3));
        c.apply(&Overrides {
            sampler: Some(SamplerKind::None),
            ..Overrides::default()
        });
        assert_eq!(c.sampler, SamplerChoice::None);
    }

    #[test]
    fn null_cap_disables_subsampling() {
        let c = ExperimentConfig::from_json(r#"{"version":1,"max_majority":null}"#).unwrap();
        assert_eq!(c.max_majority, None);
    }
}
