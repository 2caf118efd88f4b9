use log::warn;
use serde::{Deserialize, Serialize};

use super::Dataset;

/// Per-column affine scaling fitted on training rows.
///
/// Constant columns keep std 1 so they map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub constant_columns: Vec<usize>,
}

impl Standardizer {
    pub fn fit(ds: &Dataset) -> Standardizer {
        let d = ds.n_cols();
        let n = ds.n_rows().max(1) as f64;
        let mut mean = vec![0.0; d];
        for row in ds.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in ds.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let mut constant_columns = Vec::new();
        let std = var
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let sd = (s / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    constant_columns.push(j);
                    1.0
                }
            })
            .collect();
        if !constant_columns.is_empty() {
            let names: Vec<&str> = constant_columns.iter().map(|&j| ds.feature_names()[j].as_str()).collect();
            warn!("constant columns left unscaled: {}", names.join(", "));
        }
        Standardizer {
            mean,
            std,
            constant_columns,
        }
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for (j, (o, v)) in out.iter_mut().zip(row).enumerate() {
            *o = (v - self.mean[j]) / self.std[j];
        }
    }

    pub fn transform(&self, ds: &Dataset) -> Dataset {
        let d = ds.n_cols();
        let mut features = vec![0.0; ds.features().len()];
        for (row, out) in ds.rows().zip(features.chunks_exact_mut(d)) {
            self.transform_row(row, out);
        }
        ds.with_features(features)
    }

    pub fn inverse_transform(&self, ds: &Dataset) -> Dataset {
        let d = ds.n_cols();
        let features = ds
            .features()
            .iter()
            .enumerate()
            .map(|(idx, v)| v * self.std[idx % d] + self.mean[idx % d])
            .collect();
        ds.with_features(features)
    }
}

/// Fits on `train` and applies the same statistics to every set in `apply_to`.
pub fn standardize_fit_transform(train: &Dataset, apply_to: &[&Dataset]) -> (Standardizer, Dataset, Vec<Dataset>) {
    let s = Standardizer::fit(train);
    let train_t = s.transform(train);
    let others = apply_to.iter().map(|ds| s.transform(ds)).collect();
    (s, train_t, others)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(values: Vec<f64>, d: usize) -> Dataset {
        let n = values.len() / d;
        Dataset::new(values, d, vec![0; n], (0..d).map(|j| format!("c{j}")).collect()).unwrap()
    }

    #[test]
    fn two_point_column_maps_to_unit() {
        let (_, t, _) = standardize_fit_transform(&ds(vec![0.0, 2.0], 1), &[]);
        assert_eq!(t.features(), &[-1.0, 1.0]);
    }

    #[test]
    fn test_row_at_train_mean_maps_to_zero() {
        let train = ds(vec![1.0, 10.0, 3.0, 20.0], 2);
        let test = ds(vec![2.0, 15.0], 2);
        let (_, _, out) = standardize_fit_transform(&train, &[&test]);
        assert_eq!(out[0].features(), &[0.0, 0.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let (s, t, _) = standardize_fit_transform(&ds(vec![5.0, 1.0, 5.0, 2.0], 2), &[]);
        assert_eq!(s.constant_columns, vec![0]);
        assert_eq!(t.row(0)[0], 0.0);
        assert_eq!(t.row(1)[0], 0.0);
    }

    #[test]
    fn round_trip_and_not_idempotent() {
        let train = ds(vec![1.5, -3.0, 2.25, 8.0, -0.75, 100.0, 4.0, 0.5, 7.0], 3);
        let (s, t, _) = standardize_fit_transform(&train, &[]);
        for j in 0..3 {
            let col: Vec<f64> = t.rows().map(|r| r[j]).collect();
            let m = col.iter().sum::<f64>() / 3.0;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 3.0).sqrt();
            assert!(m.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-9);
        }
        assert_ne!(s.transform(&t), t);
        let back = s.inverse_transform(&t);
        for (a, b) in back.features().iter().zip(train.features()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
