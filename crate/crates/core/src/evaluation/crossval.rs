use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{basic_metrics, confusion, ConfusionCounts};
use super::roc::{roc_auc, RocPoint};
use crate::data::{stratified_kfold, Dataset, Standardizer};
use crate::ensemble::{train_stacked_ensemble, EnsembleSpec, StackedEnsemble};
use crate::error::{Error, Result};
use crate::learners::{ClassifierSpec, Model, Scorer};
use crate::resampling::{smote_kmeans_resample, smote_resample, ResampleResult, SmoteConfig, SmoteKmeansConfig};
use crate::rng::derive_seed;

/// Decision threshold for accuracy, recall and precision.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Resampling applied to the training portion of each outer fold.
///
/// `params` may be omitted, in which case defaults apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", try_from = "RawSampler")]
pub enum SamplerChoice {
    None,
    Smote(SmoteConfig),
    SmoteKmeans(SmoteKmeansConfig),
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum SamplerKindTag {
    None,
    Smote,
    SmoteKmeans,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampler {
    kind: SamplerKindTag,
    #[serde(default)]
    params: Option<serde_json::Value>,
}

impl TryFrom<RawSampler> for SamplerChoice {
    type Error = String;

    fn try_from(raw: RawSampler) -> std::result::Result<Self, String> {
        fn parse<T: serde::de::DeserializeOwned + Default>(p: Option<serde_json::Value>) -> std::result::Result<T, String> {
            match p {
                None | Some(serde_json::Value::Null) => Ok(T::default()),
                Some(v) => serde_json::from_value(v).map_err(|e| e.to_string()),
            }
        }
        match raw.kind {
            SamplerKindTag::None => match raw.params {
                None | Some(serde_json::Value::Null) => Ok(SamplerChoice::None),
                Some(serde_json::Value::Object(m)) if m.is_empty() => Ok(SamplerChoice::None),
                Some(_) => Err("sampler `none` takes no params".into()),
            },
            SamplerKindTag::Smote => parse(raw.params).map(SamplerChoice::Smote),
            SamplerKindTag::SmoteKmeans => parse(raw.params).map(SamplerChoice::SmoteKmeans),
        }
    }
}

impl SamplerChoice {
    pub fn kind(&self) -> &'static str {
        match self {
            SamplerChoice::None => "none",
            SamplerChoice::Smote(_) => "smote",
            SamplerChoice::SmoteKmeans(_) => "smote_kmeans",
        }
    }

    /// Column heading used in comparison tables.
    pub fn label(&self) -> &'static str {
        match self {
            SamplerChoice::None => "None",
            SamplerChoice::Smote(_) => "Smote",
            SamplerChoice::SmoteKmeans(_) => "Smote-Kmeans",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SamplerChoice::None => Ok(()),
            SamplerChoice::Smote(c) => c.validate(),
            SamplerChoice::SmoteKmeans(c) => c.validate(),
        }
    }

    /// Resamples `train` with `seed` in place of the configured one.
    pub fn apply(&self, train: &Dataset, seed: u64) -> Result<ResampleResult> {
        match self {
            SamplerChoice::None => Ok(ResampleResult::unchanged(train)),
            SamplerChoice::Smote(c) => smote_resample(train, &SmoteConfig { seed, ..c.clone() }),
            SamplerChoice::SmoteKmeans(c) => {
                let mut c = c.clone();
                c.smote.seed = seed;
                smote_kmeans_resample(train, &c)
            }
        }
    }
}

/// A single classifier or a stacked ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Estimator {
    Classifier(ClassifierSpec),
    Ensemble(EnsembleSpec),
}

impl Estimator {
    /// Row heading used in comparison tables.
    pub fn label(&self) -> &'static str {
        match self {
            Estimator::Classifier(c) => c.label(),
            Estimator::Ensemble(_) => "Ours",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Estimator::Classifier(_) => Ok(()),
            Estimator::Ensemble(e) => e.validate(),
        }
    }

    pub fn fit(&self, train: &Dataset, seed: u64) -> Result<Fitted> {
        Ok(match self {
            Estimator::Classifier(c) => Fitted::Model(c.fit(train, seed)?),
            Estimator::Ensemble(e) => Fitted::Ensemble(Box::new(train_stacked_ensemble(train, e, seed)?)),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Fitted {
    Model(Model),
    Ensemble(Box<StackedEnsemble>),
}

impl Scorer for Fitted {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            Fitted::Model(m) => m.predict_proba(x),
            Fitted::Ensemble(e) => e.predict_proba(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_train: usize,
    pub n_train_resampled: usize,
    pub n_test: usize,
    pub n_test_fraud: usize,
    pub synthetic_rows: usize,
    pub removed_as_noise: usize,
    pub confusion: ConfusionCounts,
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub auc: f64,
}

/// Row ids touched by each stage of one outer fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub fold: usize,
    pub test_ids: Vec<u64>,
    pub standardizer_fit_ids: Vec<u64>,
    pub sampler_output_ids: Vec<u64>,
}

impl FoldAudit {
    /// Fails if a test row reached the standardizer or the sampler output.
    pub fn check_hygiene(&self) -> Result<()> {
        let mut test = self.test_ids.clone();
        test.sort_unstable();
        for (stage, ids) in [("standardizer", &self.standardizer_fit_ids), ("sampler", &self.sampler_output_ids)] {
            if let Some(id) = ids.iter().find(|id| test.binary_search(id).is_ok()) {
                return Err(Error::Config(format!(
                    "test row {id} of fold {} reached the {stage}",
                    self.fold
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub sampler: SamplerChoice,
    pub estimator: Option<Estimator>,
    pub folds: usize,
    pub seed: u64,
    pub threshold: f64,
    pub n_rows: usize,
    pub n_fraud: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub folds: Vec<FoldMetrics>,
    /// Unweighted mean over folds, skipping undefined values.
    pub mean: MetricSummary,
    /// Population standard deviation over folds, skipping undefined values.
    pub std: MetricSummary,
    /// ROC curve of all out-of-fold scores pooled together.
    pub roc_points: Vec<RocPoint>,
    pub pooled_auc: f64,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

fn summarize(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn aggregate(folds: &[FoldMetrics]) -> (MetricSummary, MetricSummary) {
    let (acc_m, acc_s) = summarize(folds.iter().map(|f| f.accuracy));
    let (rec_m, rec_s) = summarize(folds.iter().map(|f| f.recall));
    let (pre_m, pre_s) = summarize(folds.iter().map(|f| f.precision));
    let (auc_m, auc_s) = summarize(folds.iter().map(|f| f.auc));
    (
        MetricSummary { accuracy: acc_m, recall: rec_m, precision: pre_m, auc: auc_m },
        MetricSummary { accuracy: acc_s, recall: rec_s, precision: pre_s, auc: auc_s },
    )
}

struct FoldOutcome {
    metrics: FoldMetrics,
    audit: FoldAudit,
    test_idx: Vec<usize>,
    scores: Vec<f64>,
}

/// Outer stratified k-fold evaluation with a caller-supplied learner.
///
/// Per fold: the standardizer is fitted on the training rows only, the sampler
/// resamples the standardized training rows only, `fit` trains on the result,
/// and the untouched standardized test fold is scored. `fit` receives the
/// resampled training set and a per-fold seed.
pub fn crossval_with<F, S>(
    ds: &Dataset,
    sampler: &SamplerChoice,
    k: usize,
    seed: u64,
    fit: F,
) -> Result<(EvalReport, Vec<FoldAudit>)>
where
    F: Fn(&Dataset, u64) -> Result<S> + Sync,
    S: Scorer,
{
    sampler.validate()?;
    ds.ensure_trainable()?;
    let plan = stratified_kfold(ds, k, derive_seed(seed, "outer_folds", 0))?;

    let outcomes: Vec<FoldOutcome> = (0..k)
        .into_par_iter()
        .map(|f| {
            let (train_idx, test_idx) = plan.train_test_indices(f);
            let train = ds.subset(&train_idx);
            let test = ds.subset(&test_idx);
            let standardizer = Standardizer::fit(&train);
            let train_s = standardizer.transform(&train);
            let test_s = standardizer.transform(&test);
            let resampled = sampler.apply(&train_s, derive_seed(seed, "sampler", f as u64))?;
            let model = fit(&resampled.dataset, derive_seed(seed, "fit", f as u64))?;
            let scores: Vec<f64> = model.predict_many(&test_s);

            let counts = confusion(test_s.labels(), &scores, DEFAULT_THRESHOLD)?;
            let basic = basic_metrics(&counts);
            let (_, auc) = roc_auc(test_s.labels(), &scores)?;
            let metrics = FoldMetrics {
                fold: f,
                n_train: train.n_rows(),
                n_train_resampled: resampled.dataset.n_rows(),
                n_test: test.n_rows(),
                n_test_fraud: test.n_positive(),
                synthetic_rows: resampled.dataset.n_rows() - train.n_rows(),
                removed_as_noise: resampled.removed_as_noise,
                confusion: counts,
                accuracy: basic.accuracy,
                recall: basic.recall,
                precision: basic.precision,
                auc,
            };
            let audit = FoldAudit {
                fold: f,
                test_ids: test.row_ids().to_vec(),
                standardizer_fit_ids: train.row_ids().to_vec(),
                sampler_output_ids: resampled.dataset.row_ids().to_vec(),
            };
            Ok(FoldOutcome { metrics, audit, test_idx, scores })
        })
        .collect::<Result<_>>()?;

    let mut pooled = vec![0.0; ds.n_rows()];
    let mut folds = Vec::with_capacity(k);
    let mut audits = Vec::with_capacity(k);
    for o in outcomes {
        for (&i, &s) in o.test_idx.iter().zip(&o.scores) {
            pooled[i] = s;
        }
        folds.push(o.metrics);
        audits.push(o.audit);
    }
    let (roc_points, pooled_auc) = roc_auc(ds.labels(), &pooled)?;
    let (mean, std) = aggregate(&folds);
    let report = EvalReport {
        protocol: Protocol {
            sampler: sampler.clone(),
            estimator: None,
            folds: k,
            seed,
            threshold: DEFAULT_THRESHOLD,
            n_rows: ds.n_rows(),
            n_fraud: ds.n_positive(),
        },
        folds,
        mean,
        std,
        roc_points,
        pooled_auc,
    };
    Ok((report, audits))
}

/// [`crossval_with`] for a configured estimator, returning the fold audits too.
pub fn crossval_audited(
    ds: &Dataset,
    sampler: &SamplerChoice,
    estimator: &Estimator,
    k: usize,
    seed: u64,
) -> Result<(EvalReport, Vec<FoldAudit>)> {
    estimator.validate()?;
    let (mut report, audits) = crossval_with(ds, sampler, k, seed, |train, s| estimator.fit(train, s))?;
    report.protocol.estimator = Some(estimator.clone());
    Ok((report, audits))
}

pub fn crossval_evaluate(
    ds: &Dataset,
    sampler: &SamplerChoice,
    estimator: &Estimator,
    k: usize,
    seed: u64,
) -> Result<EvalReport> {
    crossval_audited(ds, sampler, estimator, k, seed).map(|(r, _)| r)
}
