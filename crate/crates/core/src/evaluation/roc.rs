use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve with one point per distinct score, and its trapezoidal area.
///
/// Tied scores form a single step, so the area equals the Mann-Whitney
/// statistic with ties counted half.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<(Vec<RocPoint>, f64)> {
    if labels.len() != scores.len() {
        return Err(Error::Shape(format!("{} labels vs {} scores", labels.len(), scores.len())));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (p, n) = (n_pos as f64, n_neg as f64);
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    // Twice the area in units of one positive-negative pair.
    let mut doubled_pairs = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        doubled_pairs += (fp - fp0) as f64 * (tp + tp0) as f64;
        points.push(RocPoint {
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
        });
    }
    Ok((points, doubled_pairs / (2.0 * p * n)))
}
