use std::io::Write;

use serde::{Deserialize, Serialize};

use super::kmeans::{count_distinct_rows, default_cluster_count, kmeans_fit_best, KMeansModel, KMeansParams};
use super::smote::{smote_deficit, smote_generate, SmoteConfig};
use crate::data::{write_csv, Dataset};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "orig")]
    Original,
    #[serde(rename = "syn1")]
    SyntheticPass1,
    #[serde(rename = "syn2")]
    SyntheticPass2,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::Original => "orig",
            Provenance::SyntheticPass1 => "syn1",
            Provenance::SyntheticPass2 => "syn2",
        }
    }

    pub fn is_synthetic(self) -> bool {
        self != Provenance::Original
    }
}

/// Row ids of the two rows a synthetic row was interpolated between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParentPair {
    pub base_id: u64,
    pub neighbor_id: u64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteKmeansConfig {
    pub smote: SmoteConfig,
    pub kmeans: KMeansParams,
    /// Synthetic rows in clusters whose original-row minority fraction falls
    /// below this are dropped as noise.
    pub purity_threshold: f64,
}

impl Default for SmoteKmeansConfig {
    fn default() -> Self {
        SmoteKmeansConfig {
            smote: SmoteConfig::default(),
            kmeans: KMeansParams::default(),
            purity_threshold: 0.5,
        }
    }
}

impl SmoteKmeansConfig {
    pub fn validate(&self) -> Result<()> {
        self.smote.validate()?;
        if !(0.0..=1.0).contains(&self.purity_threshold) {
            return Err(Error::Config(format!(
                "purity_threshold must lie in [0, 1], got {}",
                self.purity_threshold
            )));
        }
        if self.kmeans.k == Some(0) {
            return Err(Error::Config("kmeans.k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Resampled training set. Original rows come first, unchanged and in order,
/// followed by surviving pass-1 rows and then pass-2 rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleResult {
    pub dataset: Dataset,
    pub provenance: Vec<Provenance>,
    pub parents: Vec<Option<ParentPair>>,
    pub generated_pass1: usize,
    pub removed_as_noise: usize,
    pub generated_pass2: usize,
}

impl ResampleResult {
    /// The input as-is, every row tagged original.
    pub fn unchanged(train: &Dataset) -> ResampleResult {
        ResampleResult {
            dataset: train.clone(),
            provenance: vec![Provenance::Original; train.n_rows()],
            parents: vec![None; train.n_rows()],
            generated_pass1: 0,
            removed_as_noise: 0,
            generated_pass2: 0,
        }
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.provenance.iter().filter(|&&q| q == p).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let tags: Vec<&str> = self.provenance.iter().map(|p| p.tag()).collect();
        write_csv(&self.dataset, out, &[("origin", &tags)])
    }
}

/// Class label with fewer rows (ties pick 1).
fn minority_label(ds: &Dataset) -> u8 {
    u8::from(ds.n_positive() <= ds.n_negative())
}

fn check_resample_input(train: &Dataset) -> Result<()> {
    train.ensure_trainable()?;
    let minority = train.n_positive().min(train.n_negative());
    if minority < 2 {
        return Err(Error::SmoteUnderflow(minority));
    }
    Ok(())
}

/// Runs one SMOTE pass over `pool_rows` (positions in `ds`) and appends the
/// generated rows to `ds`.
#[allow(clippy::too_many_arguments)]
fn smote_pass(
    ds: &mut Dataset,
    provenance: &mut Vec<Provenance>,
    parents: &mut Vec<Option<ParentPair>>,
    pool_rows: &[usize],
    count: usize,
    config: &SmoteConfig,
    tag: Provenance,
    label: u8,
) -> Result<usize> {
    if count == 0 {
        return Ok(0);
    }
    let dim = ds.n_cols();
    let mut pool = Vec::with_capacity(pool_rows.len() * dim);
    for &i in pool_rows {
        pool.extend_from_slice(ds.row(i));
    }
    let purpose = match tag {
        Provenance::SyntheticPass2 => "smote_pass2",
        _ => "smote_pass1",
    };
    let mut rng = rng_for(config.seed, purpose, 0);
    let samples = smote_generate(&pool, dim, count, config.k_neighbors, &mut rng)?;
    let mut feats = Vec::with_capacity(samples.len() * dim);
    for s in &samples {
        feats.extend_from_slice(&s.features);
        parents.push(Some(ParentPair {
            base_id: ds.row_ids()[pool_rows[s.base]],
            neighbor_id: ds.row_ids()[pool_rows[s.neighbor]],
            gap: s.gap,
        }));
        provenance.push(tag);
    }
    ds.append_new_rows(&feats, &vec![label; samples.len()]);
    Ok(samples.len())
}

/// Plain SMOTE: one pass lifting the minority class to `target_ratio` of the majority.
pub fn smote_resample(train: &Dataset, config: &SmoteConfig) -> Result<ResampleResult> {
    config.validate()?;
    check_resample_input(train)?;
    let label = minority_label(train);
    let minority = train.class_indices(label);
    let deficit = smote_deficit(minority.len(), train.n_rows() - minority.len(), config.target_ratio);
    let mut out = ResampleResult::unchanged(train);
    out.generated_pass1 = smote_pass(
        &mut out.dataset,
        &mut out.provenance,
        &mut out.parents,
        &minority,
        deficit,
        config,
        Provenance::SyntheticPass1,
        label,
    )?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFilterOutcome {
    /// Per row of the combined set; original rows are always kept.
    pub keep: Vec<bool>,
    pub removed: usize,
    pub model: Option<KMeansModel>,
}

/// Clusters every row of `combined` and drops synthetic rows that land in
/// clusters where original minority rows make up less than `purity_threshold`
/// of the original rows. Clusters without original rows count as fraction 0.
pub fn filter_noise(
    combined: &Dataset,
    provenance: &[Provenance],
    minority: u8,
    params: &KMeansParams,
    purity_threshold: f64,
    seed: u64,
) -> Result<NoiseFilterOutcome> {
    if provenance.len() != combined.n_rows() {
        return Err(Error::Shape(format!(
            "{} provenance tags for {} rows",
            provenance.len(),
            combined.n_rows()
        )));
    }
    if !provenance.iter().any(|p| p.is_synthetic()) {
        return Ok(NoiseFilterOutcome {
            keep: vec![true; combined.n_rows()],
            removed: 0,
            model: None,
        });
    }
    let dim = combined.n_cols();
    let k = params.k.unwrap_or_else(|| default_cluster_count(combined.n_rows()));
    let k = k.min(count_distinct_rows(combined.features(), dim));
    let model = kmeans_fit_best(combined.features(), dim, k, seed, params.max_iter, params.tol, params.restarts)?;

    let mut orig_total = vec![0usize; k];
    let mut orig_minority = vec![0usize; k];
    for (i, &c) in model.assignments.iter().enumerate() {
        if provenance[i] == Provenance::Original {
            orig_total[c] += 1;
            if combined.label(i) == minority {
                orig_minority[c] += 1;
            }
        }
    }
    let pure: Vec<bool> = (0..k)
        .map(|c| {
            let frac = if orig_total[c] == 0 {
                0.0
            } else {
                orig_minority[c] as f64 / orig_total[c] as f64
            };
            frac >= purity_threshold
        })
        .collect();
    let keep: Vec<bool> = (0..combined.n_rows())
        .map(|i| !provenance[i].is_synthetic() || pure[model.assignments[i]])
        .collect();
    let removed = keep.iter().filter(|&&k| !k).count();
    Ok(NoiseFilterOutcome {
        keep,
        removed,
        model: Some(model),
    })
}

/// SMOTE, k-means noise removal on the original-plus-synthetic set, merge, and
/// a second SMOTE pass that tops the minority class back up to the target.
pub fn smote_kmeans_resample(train: &Dataset, config: &SmoteKmeansConfig) -> Result<ResampleResult> {
    config.validate()?;
    check_resample_input(train)?;
    let label = minority_label(train);
    let minority = train.class_indices(label);
    let n_major = train.n_rows() - minority.len();
    let deficit = smote_deficit(minority.len(), n_major, config.smote.target_ratio);
    if deficit == 0 {
        return Ok(ResampleResult::unchanged(train));
    }

    let mut combined = ResampleResult::unchanged(train);
    let generated_pass1 = smote_pass(
        &mut combined.dataset,
        &mut combined.provenance,
        &mut combined.parents,
        &minority,
        deficit,
        &config.smote,
        Provenance::SyntheticPass1,
        label,
    )?;

    let filtered = filter_noise(
        &combined.dataset,
        &combined.provenance,
        label,
        &config.kmeans,
        config.purity_threshold,
        derive_seed(config.smote.seed, "filter_noise", 0),
    )?;
    let kept: Vec<usize> = (0..combined.dataset.n_rows()).filter(|&i| filtered.keep[i]).collect();
    let id_space = combined.dataset.id_space();
    let mut out = ResampleResult {
        dataset: combined.dataset.subset(&kept),
        provenance: kept.iter().map(|&i| combined.provenance[i]).collect(),
        parents: kept.iter().map(|&i| combined.parents[i]).collect(),
        generated_pass1,
        removed_as_noise: filtered.removed,
        generated_pass2: 0,
    };
    debug_assert_eq!(out.dataset.id_space(), id_space);

    // Second pass draws from original minority rows first, then survivors.
    let pool: Vec<usize> = (0..out.dataset.n_rows())
        .filter(|&i| out.dataset.label(i) == label)
        .collect();
    let deficit2 = smote_deficit(pool.len(), n_major, config.smote.target_ratio);
    out.generated_pass2 = smote_pass(
        &mut out.dataset,
        &mut out.provenance,
        &mut out.parents,
        &pool,
        deficit2,
        &config.smote,
        Provenance::SyntheticPass2,
        label,
    )?;
    Ok(out)
}
