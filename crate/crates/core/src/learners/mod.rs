//! Base classifiers behind one contract: fit on a [`Dataset`], then score rows
//! with a fraud probability in `[0, 1]`.

mod cnn;
mod gbt;
mod grow;
mod gru;
mod linear;
pub mod nn;
mod tree;

pub use cnn::{conv1d, conv_len, pooled_len, train_cnn1d, Cnn1d, CnnParams};
pub use gbt::{leaf_weight, soft_threshold, train_gbt, GbtModel, GbtParams};
pub use grow::{Node, Tree};
pub use gru::{gru_step, train_bigru, BiGru, BiGruParams, GruParams};
pub use linear::{fit_logistic_link, train_linear_svm, train_logistic, LinearSvm, LogisticModel, LogisticParams, SvmParams};
pub use nn::Differentiable;
pub use tree::{gini, train_decision_tree, train_random_forest, DecisionTree, ForestParams, MaxFeatures, RandomForest, TreeParams};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Anything that maps a feature row to a fraud score in `[0, 1]`.
pub trait Scorer {
    fn predict_proba(&self, x: &[f64]) -> f64;

    fn predict_many(&self, ds: &Dataset) -> Vec<f64> {
        ds.rows().map(|r| self.predict_proba(r)).collect()
    }
}

/// Learner kind plus hyperparameters. Serialized as
/// `{"kind": "...", "params": {...}}`; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierSpec {
    DecisionTree(#[serde(default)] TreeParams),
    RandomForest(#[serde(default)] ForestParams),
    Logistic(#[serde(default)] LogisticParams),
    LinearSvm(#[serde(default)] SvmParams),
    Gbt(#[serde(default)] GbtParams),
    Bigru(#[serde(default)] BiGruParams),
    Cnn1d(#[serde(default)] CnnParams),
}

impl ClassifierSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierSpec::DecisionTree(_) => "decision_tree",
            ClassifierSpec::RandomForest(_) => "random_forest",
            ClassifierSpec::Logistic(_) => "logistic",
            ClassifierSpec::LinearSvm(_) => "linear_svm",
            ClassifierSpec::Gbt(_) => "gbt",
            ClassifierSpec::Bigru(_) => "bigru",
            ClassifierSpec::Cnn1d(_) => "cnn1d",
        }
    }

    /// Short display label used in report tables.
    pub fn label(&self) -> &'static str {
        match self {
            ClassifierSpec::DecisionTree(_) => "DT",
            ClassifierSpec::RandomForest(_) => "RF",
            ClassifierSpec::Logistic(_) => "LR",
            ClassifierSpec::LinearSvm(_) => "SVM",
            ClassifierSpec::Gbt(_) => "GBT",
            ClassifierSpec::Bigru(_) => "BiGRU",
            ClassifierSpec::Cnn1d(_) => "CNN",
        }
    }

    pub fn fit(&self, ds: &Dataset, seed: u64) -> Result<Model> {
        Ok(match self {
            ClassifierSpec::DecisionTree(p) => Model::DecisionTree(train_decision_tree(ds, p)?),
            ClassifierSpec::RandomForest(p) => Model::RandomForest(train_random_forest(ds, p, seed)?),
            ClassifierSpec::Logistic(p) => Model::Logistic(train_logistic(ds, p, seed)?),
            ClassifierSpec::LinearSvm(p) => Model::LinearSvm(train_linear_svm(ds, p, seed)?),
            ClassifierSpec::Gbt(p) => Model::Gbt(train_gbt(ds, p)?),
            ClassifierSpec::Bigru(p) => Model::Bigru(train_bigru(ds, p, seed)?),
            ClassifierSpec::Cnn1d(p) => Model::Cnn1d(train_cnn1d(ds, p, seed)?),
        })
    }
}

/// A fitted base classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Model {
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    Logistic(LogisticModel),
    LinearSvm(LinearSvm),
    Gbt(GbtModel),
    Bigru(BiGru),
    Cnn1d(Cnn1d),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: Model,
}

impl Model {
    pub fn n_features(&self) -> usize {
        match self {
            Model::DecisionTree(m) => m.n_features,
            Model::RandomForest(m) => m.n_features,
            Model::Logistic(m) => m.weights.len(),
            Model::LinearSvm(m) => m.weights.len(),
            Model::Gbt(m) => m.n_features,
            Model::Bigru(m) => m.seq_len,
            Model::Cnn1d(m) => m.input_len,
        }
    }

    fn as_scorer(&self) -> &dyn Scorer {
        match self {
            Model::DecisionTree(m) => m,
            Model::RandomForest(m) => m,
            Model::Logistic(m) => m,
            Model::LinearSvm(m) => m,
            Model::Gbt(m) => m,
            Model::Bigru(m) => m,
            Model::Cnn1d(m) => m,
        }
    }

    /// Scores one row after checking its width.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::Shape(format!(
                "model expects {} features, got {}",
                self.n_features(),
                x.len()
            )));
        }
        Ok(self.predict_proba(x))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })
        .expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format_version {}",
                file.format_version
            )));
        }
        Ok(file.model)
    }
}

impl Scorer for Model {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.as_scorer().predict_proba(x).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_shape() {
        let s: ClassifierSpec = serde_json::from_str(r#"{"kind":"gbt","params":{"n_rounds":3}}"#).unwrap();
        match &s {
            ClassifierSpec::Gbt(p) => {
                assert_eq!(p.n_rounds, 3);
                assert_eq!(p.eta, 0.1);
            }
            other => panic!("{other:?}"),
        }
        let s: ClassifierSpec = serde_json::from_str(r#"{"kind":"decision_tree","params":{}}"#).unwrap();
        assert_eq!(s, ClassifierSpec::DecisionTree(TreeParams::default()));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<ClassifierSpec>(r#"{"kind":"gbt","params":{"n_round":3}}"#).unwrap_err();
        assert!(err.to_string().contains("n_round"));
        assert!(serde_json::from_str::<ClassifierSpec>(r#"{"kind":"lstm"}"#).is_err());
        assert!(serde_json::from_str::<ClassifierSpec>(r#"{"kind":"gbt","extra":1}"#).is_err());
    }

    #[test]
    fn model_json_is_versioned() {
        let ds = crate::data::make_synthetic(20, 20, 2, 2.0, 0);
        let m = ClassifierSpec::DecisionTree(TreeParams::default()).fit(&ds, 0).unwrap();
        let text = m.to_json();
        assert!(text.starts_with(r#"{"format_version":1,"model":{"kind":"decision_tree""#));
        assert_eq!(Model::from_json(&text).unwrap(), m);
        let bumped = text.replacen("\"format_version\":1", "\"format_version\":9", 1);
        assert!(matches!(Model::from_json(&bumped), Err(Error::Format(_))));
        assert!(matches!(m.score(&[0.0]), Err(Error::Shape(_))));
    }
}
