//! Second-order gradient boosting on the logistic loss with L1/L2-regularized
//! leaf weights, in the style of XGBoost's exact greedy learner.

use serde::{Deserialize, Serialize};

use super::grow::{grow, Criterion, GrowSettings, Tree};
use super::nn::{bce_with_logit, sigmoid};
use super::Scorer;
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub n_rounds: usize,
    /// Learning rate applied to every leaf weight.
    pub eta: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// L1 penalty on leaf weights.
    pub alpha: f64,
    pub max_depth: usize,
    /// Minimum gain for a split to be kept.
    pub gamma: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_rounds: 200,
            eta: 0.1,
            lambda: 1.0,
            alpha: 0.0,
            max_depth: 4,
            gamma: 0.0,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub params: GbtParams,
    pub n_features: usize,
    /// Leaf values are the unscaled weights; prediction multiplies by `eta`.
    pub trees: Vec<Tree>,
    /// Mean training log-loss before boosting and after every round.
    pub train_loss: Vec<f64>,
}

impl GbtModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.params.eta * self.trees.iter().map(|t| t.leaf_value(x)).sum::<f64>()
    }
}

impl Scorer for GbtModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}

/// Soft-thresholds a gradient sum by the L1 penalty.
pub fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

/// Optimal regularized leaf weight `-T_alpha(G) / (H + lambda)`.
pub fn leaf_weight(g: f64, h: f64, lambda: f64, alpha: f64) -> f64 {
    let denom = h + lambda;
    if denom <= 0.0 {
        return 0.0;
    }
    -soft_threshold(g, alpha) / denom
}

struct SecondOrder<'a> {
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbtParams,
}

#[derive(Debug, Clone, Copy, Default)]
struct GradStats {
    g: f64,
    h: f64,
    n: f64,
}

impl SecondOrder<'_> {
    fn score(&self, s: &GradStats) -> f64 {
        let denom = s.h + self.params.lambda;
        if denom <= 0.0 {
            return 0.0;
        }
        let t = soft_threshold(s.g, self.params.alpha);
        t * t / denom
    }
}

impl Criterion for SecondOrder<'_> {
    type Stats = GradStats;

    fn add(&self, s: &mut GradStats, row: usize, weight: f64) {
        s.g += weight * self.grad[row];
        s.h += weight * self.hess[row];
        s.n += weight;
    }

    fn diff(&self, t: &GradStats, l: &GradStats) -> GradStats {
        GradStats {
            g: t.g - l.g,
            h: t.h - l.h,
            n: t.n - l.n,
        }
    }

    fn splittable(&self, t: &GradStats) -> bool {
        t.n >= 2.0
    }

    fn gain(&self, t: &GradStats, l: &GradStats, r: &GradStats) -> Option<f64> {
        let mcw = self.params.min_child_weight;
        if l.h < mcw || r.h < mcw {
            return None;
        }
        Some(0.5 * (self.score(l) + self.score(r) - self.score(t)) - self.params.gamma)
    }

    fn leaf_value(&self, t: &GradStats) -> f64 {
        leaf_weight(t.g, t.h, self.params.lambda, self.params.alpha)
    }
}

fn mean_log_loss(margins: &[f64], labels: &[u8]) -> f64 {
    margins
        .iter()
        .zip(labels)
        .map(|(&m, &y)| bce_with_logit(m, f64::from(y)))
        .sum::<f64>()
        / margins.len() as f64
}

pub fn train_gbt(ds: &Dataset, params: &GbtParams) -> Result<GbtModel> {
    ds.ensure_trainable()?;
    if params.eta.is_nan() || params.eta <= 0.0 || params.lambda < 0.0 || params.alpha < 0.0 {
        return Err(Error::Config("gbt needs eta > 0, lambda >= 0 and alpha >= 0".into()));
    }
    let n = ds.n_rows();
    let labels = ds.labels();
    let rows: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0)).collect();
    let settings = GrowSettings {
        max_depth: params.max_depth,
        features_per_node: None,
    };
    let mut margins = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut train_loss = vec![mean_log_loss(&margins, labels)];
    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            grad[i] = p - f64::from(labels[i]);
            hess[i] = p * (1.0 - p);
        }
        let criterion = SecondOrder {
            grad: &grad,
            hess: &hess,
            params,
        };
        let tree = grow(ds, &rows, &criterion, &settings, None);
        for (i, m) in margins.iter_mut().enumerate() {
            *m += params.eta * tree.leaf_value(ds.row(i));
        }
        trees.push(tree);
        train_loss.push(mean_log_loss(&margins, labels));
    }
    Ok(GbtModel {
        params: params.clone(),
        n_features: ds.n_cols(),
        trees,
        train_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::grow::Node;

    #[test]
    fn soft_threshold_shrinks_toward_zero() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn huge_lambda_gives_half() {
        let ds = crate::data::make_synthetic(30, 30, 2, 3.0, 1);
        let params = GbtParams {
            n_rounds: 5,
            lambda: 1e300,
            ..Default::default()
        };
        let m = train_gbt(&ds, &params).unwrap();
        for t in &m.trees {
            for node in &t.nodes {
                if let Node::Leaf { value } = node {
                    assert!(value.abs() < 1e-290);
                }
            }
        }
        for row in ds.rows() {
            assert_eq!(m.predict_proba(row), 0.5);
        }
    }

    #[test]
    fn no_rounds_is_constant_half() {
        let ds = crate::data::make_synthetic(10, 10, 2, 3.0, 1);
        let m = train_gbt(&ds, &GbtParams { n_rounds: 0, ..Default::default() }).unwrap();
        assert_eq!(m.predict_proba(ds.row(0)), 0.5);
        assert_eq!(m.train_loss, vec![std::f64::consts::LN_2]);
    }
}
