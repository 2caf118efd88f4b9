use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub missing: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation over the present values.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionReport {
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_fraud: usize,
    pub fraud_fraction: f64,
    pub missing_per_column: BTreeMap<String, usize>,
    pub columns: Vec<ColumnSummary>,
}

impl InspectionReport {
    pub fn total_missing(&self) -> usize {
        self.missing_per_column.values().sum()
    }

    pub fn summary_line(&self) -> String {
        format!(
            "n_rows={} n_fraud={} fraud_fraction={:.6} missing={}",
            self.n_rows,
            self.n_fraud,
            self.fraud_fraction,
            self.total_missing()
        )
    }
}

pub fn inspect(ds: &Dataset) -> InspectionReport {
    let n_rows = ds.n_rows();
    let n_fraud = ds.n_positive();
    let mut columns = Vec::with_capacity(ds.n_cols());
    for (j, name) in ds.feature_names().iter().enumerate() {
        let present: Vec<f64> = ds.rows().map(|r| r[j]).filter(|v| v.is_finite()).collect();
        let missing = n_rows - present.len();
        let (min, max, mean, std) = if present.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            let n = present.len() as f64;
            let mean = present.iter().sum::<f64>() / n;
            let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let min = present.iter().copied().fold(f64::INFINITY, f64::min);
            let max = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (min, max, mean, var.sqrt())
        };
        columns.push(ColumnSummary {
            name: name.clone(),
            missing,
            min,
            max,
            mean,
            std,
        });
    }
    InspectionReport {
        n_rows,
        n_cols: ds.n_cols(),
        n_fraud,
        fraud_fraction: if n_rows == 0 { 0.0 } else { n_fraud as f64 / n_rows as f64 },
        missing_per_column: columns.iter().map(|c| (c.name.clone(), c.missing)).collect(),
        columns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_statistics() {
        let ds = Dataset::new(vec![1.0, 3.0], 1, vec![0, 0], vec!["c".into()]).unwrap();
        let r = inspect(&ds);
        assert_eq!(r.fraud_fraction, 0.0);
        let c = &r.columns[0];
        assert_eq!((c.min, c.max, c.mean, c.std), (1.0, 3.0, 2.0, 1.0));
    }

    #[test]
    fn counts_missing_and_fraud() {
        let ds = Dataset::new(vec![1.0, f64::NAN, 3.0, 4.0], 2, vec![1, 0], vec!["a".into(), "b".into()]).unwrap();
        let r = inspect(&ds);
        assert_eq!(r.n_fraud, 1);
        assert_eq!(r.fraud_fraction, 0.5);
        assert_eq!(r.missing_per_column["b"], 1);
        assert_eq!(r.missing_per_column["a"], 0);
        assert_eq!(r.columns[1].mean, 4.0);
    }
}
