//! `model.json`: the fitted standardizer plus either a single model or a
//! reference to a stacked-ensemble manifest stored next to it.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use imbf_core::evaluation::Fitted;
use imbf_core::learners::MODEL_FORMAT_VERSION;
use imbf_core::{Model, Scorer, StackedEnsemble, Standardizer};
use serde::{Deserialize, Serialize};

use crate::output::OutputDir;

pub const MODEL_FILE: &str = "model.json";
const ENSEMBLE_MANIFEST: &str = "ensemble.json";

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
enum Stored {
    Classifier { model: Model },
    Ensemble { manifest: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    standardizer: Standardizer,
    predictor: Stored,
}

/// A fitted predictor that scores rows in input units.
pub struct TrainedModel {
    pub standardizer: Standardizer,
    pub predictor: Fitted,
}

impl TrainedModel {
    pub fn new(standardizer: Standardizer, predictor: Fitted) -> Self {
        TrainedModel {
            standardizer,
            predictor,
        }
    }

    pub(crate) fn save(&self, out: &mut OutputDir) -> anyhow::Result<()> {
        let predictor = match &self.predictor {
            Fitted::Model(m) => Stored::Classifier { model: m.clone() },
            Fitted::Ensemble(e) => {
                for path in e.save(out.path(), ENSEMBLE_MANIFEST)? {
                    out.adopt(path)?;
                }
                Stored::Ensemble {
                    manifest: ENSEMBLE_MANIFEST.into(),
                }
            }
        };
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            standardizer: self.standardizer.clone(),
            predictor,
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        out.write(MODEL_FILE, text.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: ModelFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            bail!("unsupported model format_version {}", file.format_version);
        }
        let predictor = match file.predictor {
            Stored::Classifier { model } => Fitted::Model(model),
            Stored::Ensemble { manifest } => {
                let dir = path.parent().unwrap_or(Path::new("."));
                Fitted::Ensemble(Box::new(StackedEnsemble::load(&dir.join(manifest))?))
            }
        };
        Ok(TrainedModel {
            standardizer: file.standardizer,
            predictor,
        })
    }

    /// Fraud score for one row given in input units.
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut z = vec![0.0; row.len()];
        self.standardizer.transform_row(row, &mut z);
        self.predictor.predict_proba(&z)
    }
}
