use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts at one threshold; a score equal to the threshold counts as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(labels: &[u8], scores: &[f64], threshold: f64) -> Result<ConfusionCounts> {
    if labels.len() != scores.len() {
        return Err(Error::Shape(format!("{} labels vs {} scores", labels.len(), scores.len())));
    }
    let mut c = ConfusionCounts::default();
    for (&y, &s) in labels.iter().zip(scores) {
        match (y == 1, s >= threshold) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Accuracy, recall and precision. Undefined ratios are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicMetrics {
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
}

pub fn basic_metrics(c: &ConfusionCounts) -> BasicMetrics {
    let ratio = |num: usize, den: usize, what: &str| {
        if den == 0 {
            warn!("{what} is undefined for these counts; reporting NaN");
            f64::NAN
        } else {
            num as f64 / den as f64
        }
    };
    BasicMetrics {
        accuracy: ratio(c.tp + c.tn, c.total(), "accuracy"),
        recall: ratio(c.tp, c.tp + c.fn_, "recall"),
        precision: ratio(c.tp, c.tp + c.fp, "precision"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recall_from_counts() {
        let m = basic_metrics(&ConfusionCounts { tp: 9, fp: 0, tn: 5, fn_: 1 });
        assert_eq!(m.recall, 0.9);
    }

    #[test]
    fn perfect_predictions() {
        let c = confusion(&[1, 0, 1], &[0.9, 0.2, 0.5], 0.5).unwrap();
        let m = basic_metrics(&c);
        assert_eq!((m.accuracy, m.recall, m.precision), (1.0, 1.0, 1.0));
    }

    #[test]
    fn hand_tally() {
        let c = confusion(&[1, 0, 1, 0], &[0.9, 0.8, 0.4, 0.1], 0.5).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 1, tn: 1, fn_: 1 });
        assert_eq!(basic_metrics(&c).accuracy, 0.5);
    }

    #[test]
    fn undefined_ratios_are_nan() {
        let m = basic_metrics(&ConfusionCounts { tp: 0, fp: 0, tn: 4, fn_: 0 });
        assert!(m.recall.is_nan());
        assert!(m.precision.is_nan());
        assert_eq!(m.accuracy, 1.0);
    }
}
