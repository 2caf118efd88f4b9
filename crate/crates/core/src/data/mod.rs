//! Labeled tabular datasets: loading, inspection, standardization, folds and
//! synthetic generators.

mod csv;
mod folds;
mod inspect;
mod standardize;
mod synth;

pub use self::csv::{load_csv, parse_csv, write_csv, SchemaMode};
pub use self::folds::{stratified_kfold, FoldPlan};
pub use self::inspect::{inspect, ColumnSummary, InspectionReport};
pub use self::standardize::{standardize_fit_transform, Standardizer};
pub use self::synth::{make_synthetic, subsample_majority};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major feature matrix with binary labels and stable row ids.
///
/// `id_space` is one past the largest row id ever issued in this dataset's
/// lineage; subsets inherit it so that synthetic rows never reuse an id held
/// by a sibling split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    n_cols: usize,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    row_ids: Vec<u64>,
    id_space: u64,
}

impl Dataset {
    /// Builds a dataset with row ids `0..n`.
    pub fn new(features: Vec<f64>, n_cols: usize, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        let n = labels.len() as u64;
        Self::with_ids(features, n_cols, labels, feature_names, (0..n).collect(), n)
    }

    pub fn with_ids(
        features: Vec<f64>,
        n_cols: usize,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        row_ids: Vec<u64>,
        id_space: u64,
    ) -> Result<Self> {
        if n_cols == 0 {
            return Err(Error::Shape("dataset needs at least one feature column".into()));
        }
        if features.len() != labels.len() * n_cols {
            return Err(Error::Shape(format!(
                "{} feature values do not fill {} rows of {} columns",
                features.len(),
                labels.len(),
                n_cols
            )));
        }
        if feature_names.len() != n_cols {
            return Err(Error::Shape(format!("{} feature names for {} columns", feature_names.len(), n_cols)));
        }
        if row_ids.len() != labels.len() {
            return Err(Error::Shape(format!("{} row ids for {} rows", row_ids.len(), labels.len())));
        }
        if let Some(pos) = labels.iter().position(|&l| l > 1) {
            return Err(Error::Label {
                row: pos + 1,
                value: labels[pos].to_string(),
            });
        }
        if let Some(&max_id) = row_ids.iter().max() {
            if max_id >= id_space {
                return Err(Error::Shape(format!("row id {max_id} outside id space {id_space}")));
            }
        }
        Ok(Dataset {
            features,
            n_cols,
            labels,
            feature_names,
            row_ids,
            id_space,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_cols)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn id_space(&self) -> u64 {
        self.id_space
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn n_negative(&self) -> usize {
        self.n_rows() - self.n_positive()
    }

    /// Indices of rows with the given label, in row order.
    pub fn class_indices(&self, label: u8) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.labels[i] == label).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.features.iter().filter(|v| !v.is_finite()).count()
    }

    /// Checks the preconditions shared by every training operation.
    pub fn ensure_trainable(&self) -> Result<()> {
        let missing = self.missing_count();
        if missing > 0 {
            return Err(Error::MissingValues { count: missing });
        }
        let positives = self.n_positive();
        let negatives = self.n_rows() - positives;
        if positives == 0 || negatives == 0 {
            return Err(Error::DegenerateLabels { positives, negatives });
        }
        Ok(())
    }

    /// Rows at `indices`, in that order, keeping their ids.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            features,
            n_cols: self.n_cols,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
            id_space: self.id_space,
        }
    }

    /// Same rows and ids with a new feature matrix of identical shape.
    pub(crate) fn with_features(&self, features: Vec<f64>) -> Dataset {
        debug_assert_eq!(features.len(), self.features.len());
        Dataset {
            features,
            ..self.clone()
        }
    }

    /// Appends rows carrying fresh ids drawn from the id space.
    pub(crate) fn append_new_rows(&mut self, features: &[f64], labels: &[u8]) -> Vec<u64> {
        debug_assert_eq!(features.len(), labels.len() * self.n_cols);
        let start = self.id_space;
        let ids: Vec<u64> = (start..start + labels.len() as u64).collect();
        self.features.extend_from_slice(features);
        self.labels.extend_from_slice(labels);
        self.row_ids.extend_from_slice(&ids);
        self.id_space = start + labels.len() as u64;
        ids
    }
}

/// How training-time commands treat missing feature values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Reject,
    DropRow,
    MeanImpute,
}

impl MissingPolicy {
    pub fn apply(self, ds: &Dataset) -> Result<Dataset> {
        let missing = ds.missing_count();
        if missing == 0 {
            return Ok(ds.clone());
        }
        match self {
            MissingPolicy::Reject => Err(Error::MissingValues { count: missing }),
            MissingPolicy::DropRow => {
                let keep: Vec<usize> = (0..ds.n_rows())
                    .filter(|&i| ds.row(i).iter().all(|v| v.is_finite()))
                    .collect();
                if keep.is_empty() {
                    return Err(Error::EmptyDataset);
                }
                Ok(ds.subset(&keep))
            }
            MissingPolicy::MeanImpute => {
                let d = ds.n_cols();
                let mut sums = vec![0.0; d];
                let mut counts = vec![0usize; d];
                for row in ds.rows() {
                    for (j, &v) in row.iter().enumerate() {
                        if v.is_finite() {
                            sums[j] += v;
                            counts[j] += 1;
                        }
                    }
                }
                let means: Vec<f64> = sums
                    .iter()
                    .zip(&counts)
                    .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
                    .collect();
                let features = ds
                    .features()
                    .iter()
                    .enumerate()
                    .map(|(idx, &v)| if v.is_finite() { v } else { means[idx % d] })
                    .collect();
                Ok(ds.with_features(features))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::new(
            vec![1.0, f64::NAN, 3.0, 4.0, 5.0, 6.0],
            2,
            vec![0, 1, 0],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn shape_is_checked() {
        assert!(matches!(
            Dataset::new(vec![1.0; 5], 2, vec![0, 1, 0], vec!["a".into(), "b".into()]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            Dataset::new(vec![1.0; 2], 1, vec![0, 2], vec!["a".into()]),
            Err(Error::Label { row: 2, .. })
        ));
    }

    #[test]
    fn missing_policies() {
        let ds = tiny();
        assert!(matches!(ds.ensure_trainable(), Err(Error::MissingValues { count: 1 })));
        assert!(MissingPolicy::Reject.apply(&ds).is_err());

        let dropped = MissingPolicy::DropRow.apply(&ds).unwrap();
        assert_eq!(dropped.n_rows(), 2);
        assert_eq!(dropped.row_ids(), &[1, 2]);

        let imputed = MissingPolicy::MeanImpute.apply(&ds).unwrap();
        assert_eq!(imputed.row(0), &[1.0, 5.0]);
        assert_eq!(imputed.missing_count(), 0);
    }

    #[test]
    fn appended_rows_get_fresh_ids() {
        let mut ds = tiny().subset(&[2]);
        assert_eq!(ds.id_space(), 3);
        let ids = ds.append_new_rows(&[0.0, 0.0, 1.0, 1.0], &[1, 1]);
        assert_eq!(ids, vec![3, 4]);
        assert_eq!(ds.id_space(), 5);
    }
}
