//! Stacked ensemble: base learners produce out-of-fold scores that train a
//! meta-classifier (a boosted-tree model by default).
//!
//! For each internal fold `f` and base spec `b`, a copy of `b` is fitted on the
//! other folds (optionally on a class-stratified bootstrap replicate of them)
//! and scores fold `f`. At inference the meta-feature for base `b` is the mean
//! score of its per-fold copies.

use std::fs;
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{stratified_kfold, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::learners::{BiGruParams, ClassifierSpec, CnnParams, GbtParams, Model, Scorer, MODEL_FORMAT_VERSION};
use crate::rng::{derive_seed, rng_for};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub base_specs: Vec<ClassifierSpec>,
    pub meta_spec: ClassifierSpec,
    pub oof_folds: usize,
    /// Fit each base copy on a bootstrap replicate of its training folds.
    pub bootstrap: bool,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            base_specs: vec![
                ClassifierSpec::Bigru(BiGruParams::default()),
                // Second recurrent member with a wider state.
                ClassifierSpec::Bigru(BiGruParams {
                    hidden: 32,
                    ..BiGruParams::default()
                }),
                ClassifierSpec::Cnn1d(CnnParams::default()),
            ],
            meta_spec: ClassifierSpec::Gbt(GbtParams::default()),
            oof_folds: 5,
            bootstrap: true,
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.base_specs.is_empty() {
            return Err(Error::Config("ensemble needs at least one base learner".into()));
        }
        if self.oof_folds < 2 {
            return Err(Error::Config(format!(
                "ensemble needs at least 2 out-of-fold splits, got {}",
                self.oof_folds
            )));
        }
        Ok(())
    }
}

/// Out-of-fold meta-features plus everything needed to audit them.
#[derive(Debug, Clone)]
pub struct OofOutput {
    /// Row-major `n_rows x n_bases`.
    pub meta: Vec<f64>,
    pub labels: Vec<u8>,
    /// `models[b][f]` was fitted without fold `f`.
    pub models: Vec<Vec<Model>>,
    pub fold_plan: FoldPlan,
    /// Row ids each `models[b][f]` was fitted on.
    pub fit_row_ids: Vec<Vec<Vec<u64>>>,
    pub row_ids: Vec<u64>,
}

impl OofOutput {
    pub fn n_bases(&self) -> usize {
        self.models.len()
    }

    pub fn meta_dataset(&self) -> Dataset {
        let b = self.n_bases();
        let names = (0..b).map(|i| format!("base{i}")).collect();
        Dataset::new(self.meta.clone(), b, self.labels.clone(), names).expect("meta matrix shape is consistent")
    }

    /// Fails if any row's meta-feature came from a model that saw the row.
    pub fn check_no_leakage(&self) -> Result<()> {
        for (b, per_fold) in self.fit_row_ids.iter().enumerate() {
            for (f, ids) in per_fold.iter().enumerate() {
                let mut sorted = ids.clone();
                sorted.sort_unstable();
                for (i, &fold) in self.fold_plan.assignments.iter().enumerate() {
                    if fold == f && sorted.binary_search(&self.row_ids[i]).is_ok() {
                        return Err(Error::Leakage {
                            row_id: self.row_ids[i],
                            base: b,
                            fold: f,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Picks the rows a base copy trains on: all of `pool`, or a bootstrap
/// replicate drawn separately within each class so both classes survive.
fn fit_rows(train: &Dataset, pool: &[usize], bootstrap: bool, seed: u64) -> Vec<usize> {
    if !bootstrap {
        return pool.to_vec();
    }
    let mut rng = rng_for(seed, "oof_bootstrap", 0);
    let mut rows = Vec::with_capacity(pool.len());
    for label in [0u8, 1] {
        let class: Vec<usize> = pool.iter().copied().filter(|&i| train.label(i) == label).collect();
        for _ in 0..class.len() {
            rows.push(class[rng.random_range(0..class.len())]);
        }
    }
    rows.sort_unstable();
    rows
}

pub(crate) fn oof_meta_features(train: &Dataset, spec: &EnsembleSpec, seed: u64, leak: bool) -> Result<OofOutput> {
    spec.validate()?;
    train.ensure_trainable()?;
    let k = spec.oof_folds;
    let plan = stratified_kfold(train, k, derive_seed(seed, "oof_folds", 0))?;
    let n_bases = spec.base_specs.len();
    let jobs: Vec<(usize, usize)> = (0..n_bases).flat_map(|b| (0..k).map(move |f| (b, f))).collect();

    let fitted: Vec<BaseFoldFit> = jobs
        .par_iter()
        .map(|&(b, f)| {
            let (train_idx, test_idx) = plan.train_test_indices(f);
            let pool: Vec<usize> = if leak { (0..train.n_rows()).collect() } else { train_idx };
            let job = (b * k + f) as u64;
            let rows = fit_rows(train, &pool, spec.bootstrap, derive_seed(seed, "oof_rows", job));
            let subset = train.subset(&rows);
            let model = spec.base_specs[b].fit(&subset, derive_seed(seed, "oof_fit", job))?;
            let scores = test_idx.iter().map(|&i| model.predict_proba(train.row(i))).collect();
            Ok((model, subset.row_ids().to_vec(), test_idx, scores))
        })
        .collect::<Result<_>>()?;

    let n = train.n_rows();
    let mut meta = vec![0.0; n * n_bases];
    let mut models: Vec<Vec<Model>> = (0..n_bases).map(|_| Vec::with_capacity(k)).collect();
    let mut fit_row_ids: Vec<Vec<Vec<u64>>> = (0..n_bases).map(|_| Vec::with_capacity(k)).collect();
    for (&(b, _), (model, ids, test_idx, scores)) in jobs.iter().zip(fitted) {
        for (&i, s) in test_idx.iter().zip(scores) {
            meta[i * n_bases + b] = s;
        }
        models[b].push(model);
        fit_row_ids[b].push(ids);
    }
    Ok(OofOutput {
        meta,
        labels: train.labels().to_vec(),
        models,
        fold_plan: plan,
        fit_row_ids,
        row_ids: train.row_ids().to_vec(),
    })
}

/// A fitted base copy, its training ids, the held-out positions and their scores.
type BaseFoldFit = (Model, Vec<u64>, Vec<usize>, Vec<f64>);

/// Out-of-fold meta-feature matrix for `train`.
pub fn make_oof_meta_features(train: &Dataset, spec: &EnsembleSpec, seed: u64) -> Result<OofOutput> {
    oof_meta_features(train, spec, seed, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedEnsemble {
    pub spec: EnsembleSpec,
    pub n_features: usize,
    /// `base_models[b][f]`, one list per base spec.
    pub base_models: Vec<Vec<Model>>,
    pub meta_model: Model,
    pub fold_plan: FoldPlan,
}

pub fn train_stacked_ensemble(train: &Dataset, spec: &EnsembleSpec, seed: u64) -> Result<StackedEnsemble> {
    let oof = make_oof_meta_features(train, spec, seed)?;
    let meta_model = spec.meta_spec.fit(&oof.meta_dataset(), derive_seed(seed, "meta_fit", 0))?;
    Ok(StackedEnsemble {
        spec: spec.clone(),
        n_features: train.n_cols(),
        base_models: oof.models,
        meta_model,
        fold_plan: oof.fold_plan,
    })
}

#[derive(Serialize, Deserialize)]
struct EnsembleManifest {
    format_version: u32,
    kind: String,
    spec: EnsembleSpec,
    n_features: usize,
    fold_plan: FoldPlan,
    base_models: Vec<Vec<String>>,
    meta_model: String,
}

impl StackedEnsemble {
    /// Averaged per-fold base scores for one row.
    pub fn meta_features(&self, x: &[f64]) -> Vec<f64> {
        self.base_models
            .iter()
            .map(|copies| copies.iter().map(|m| m.predict_proba(x)).sum::<f64>() / copies.len() as f64)
            .collect()
    }

    pub fn predict_ensemble(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Shape(format!(
                "ensemble expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        Ok(self.predict_proba(x))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ensemble serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    /// Writes `manifest_name` plus one model file per member into `dir`.
    pub fn save(&self, dir: &Path, manifest_name: &str) -> Result<Vec<std::path::PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let mut write = |name: &str, text: &str| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written.push(path);
            Ok(())
        };
        let mut base_names = Vec::new();
        for (b, copies) in self.base_models.iter().enumerate() {
            let mut names = Vec::new();
            for (f, m) in copies.iter().enumerate() {
                let name = format!("base{b}_fold{f}.json");
                write(&name, &m.to_json())?;
                names.push(name);
            }
            base_names.push(names);
        }
        write("meta.json", &self.meta_model.to_json())?;
        let manifest = EnsembleManifest {
            format_version: MODEL_FORMAT_VERSION,
            kind: "stacked_ensemble".into(),
            spec: self.spec.clone(),
            n_features: self.n_features,
            fold_plan: self.fold_plan.clone(),
            base_models: base_names,
            meta_model: "meta.json".into(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail");
        write(manifest_name, &text)?;
        Ok(written)
    }

    pub fn load(manifest_path: &Path) -> Result<Self> {
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
        let manifest: EnsembleManifest =
            serde_json::from_str(&read(manifest_path)?).map_err(|e| Error::Format(e.to_string()))?;
        if manifest.format_version != MODEL_FORMAT_VERSION || manifest.kind != "stacked_ensemble" {
            return Err(Error::Format("not a supported stacked ensemble manifest".into()));
        }
        let base_models = manifest
            .base_models
            .iter()
            .map(|names| names.iter().map(|n| Model::from_json(&read(&dir.join(n))?)).collect())
            .collect::<Result<_>>()?;
        let meta_model = Model::from_json(&read(&dir.join(&manifest.meta_model))?)?;
        Ok(StackedEnsemble {
            spec: manifest.spec,
            n_features: manifest.n_features,
            base_models,
            meta_model,
            fold_plan: manifest.fold_plan,
        })
    }
}

impl Scorer for StackedEnsemble {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.meta_model.predict_proba(&self.meta_features(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_synthetic;
    use crate::learners::TreeParams;

    fn stump_spec(bases: usize, folds: usize) -> EnsembleSpec {
        EnsembleSpec {
            base_specs: vec![ClassifierSpec::DecisionTree(TreeParams { max_depth: 2, min_leaf: 2 }); bases],
            meta_spec: ClassifierSpec::Gbt(GbtParams {
                n_rounds: 10,
                ..Default::default()
            }),
            oof_folds: folds,
            bootstrap: true,
        }
    }

    #[test]
    fn two_folds_fill_disjoint_halves() {
        let ds = make_synthetic(40, 40, 2, 2.0, 1);
        let oof = make_oof_meta_features(&ds, &stump_spec(1, 2), 3).unwrap();
        assert_eq!(oof.models[0].len(), 2);
        for f in 0..2 {
            let (_, test) = oof.fold_plan.train_test_indices(f);
            assert_eq!(test.len(), 40);
            for &i in &test {
                assert_eq!(oof.meta[i], oof.models[0][f].predict_proba(ds.row(i)));
            }
        }
        oof.check_no_leakage().unwrap();
    }

    #[test]
    fn leaky_procedure_is_detected() {
        let ds = make_synthetic(30, 30, 2, 2.0, 1);
        let spec = EnsembleSpec {
            bootstrap: false,
            ..stump_spec(2, 3)
        };
        let leaky = oof_meta_features(&ds, &spec, 3, true).unwrap();
        assert!(matches!(leaky.check_no_leakage(), Err(Error::Leakage { .. })));
        let clean = oof_meta_features(&ds, &spec, 3, false).unwrap();
        clean.check_no_leakage().unwrap();
    }

    #[test]
    fn constant_base_gives_constant_column() {
        // Balanced folds and a depth-0 tree: every copy predicts the class ratio.
        let ds = make_synthetic(50, 50, 2, 2.0, 4);
        let spec = EnsembleSpec {
            base_specs: vec![ClassifierSpec::DecisionTree(TreeParams { max_depth: 0, min_leaf: 1 })],
            ..stump_spec(1, 5)
        };
        let oof = make_oof_meta_features(&ds, &spec, 0).unwrap();
        assert!(oof.meta.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn prediction_is_meta_of_mean_base_score() {
        let ds = make_synthetic(40, 40, 3, 1.5, 6);
        let ens = train_stacked_ensemble(&ds, &stump_spec(1, 2), 8).unwrap();
        let x = ds.row(5);
        let mean = (ens.base_models[0][0].predict_proba(x) + ens.base_models[0][1].predict_proba(x)) / 2.0;
        assert_eq!(ens.predict_ensemble(x).unwrap(), ens.meta_model.predict_proba(&[mean]));
        assert!(matches!(ens.predict_ensemble(&[0.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn manifest_round_trip() {
        let ds = make_synthetic(30, 30, 2, 2.0, 2);
        let ens = train_stacked_ensemble(&ds, &stump_spec(2, 2), 1).unwrap();
        let dir = std::env::temp_dir().join(format!("imbf-ens-{}", std::process::id()));
        let written = ens.save(&dir, "model.json").unwrap();
        assert_eq!(written.len(), 6);
        let back = StackedEnsemble::load(&dir.join("model.json")).unwrap();
        assert_eq!(back, ens);
        assert_eq!(StackedEnsemble::from_json(&ens.to_json()).unwrap(), ens);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn spec_validation() {
        let mut s = stump_spec(1, 2);
        s.oof_folds = 1;
        assert!(s.validate().is_err());
        s.oof_folds = 2;
        s.base_specs.clear();
        assert!(s.validate().is_err());
        assert_eq!(EnsembleSpec::default().base_specs.len(), 3);
    }
}
