//! CART classification trees with Gini impurity, and random forests over them.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grow::{grow, Criterion, GrowSettings, Tree};
use super::Scorer;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_for;

/// Gini impurity `1 - p^2 - (1 - p)^2` of a node with `pos` positives out of `n`.
pub fn gini(pos: f64, n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

pub(crate) struct Gini<'a> {
    labels: &'a [u8],
    min_leaf: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ClassCounts {
    n: f64,
    pos: f64,
}

impl Criterion for Gini<'_> {
    type Stats = ClassCounts;

    fn add(&self, s: &mut ClassCounts, row: usize, weight: f64) {
        s.n += weight;
        s.pos += weight * f64::from(self.labels[row]);
    }

    fn diff(&self, total: &ClassCounts, left: &ClassCounts) -> ClassCounts {
        ClassCounts {
            n: total.n - left.n,
            pos: total.pos - left.pos,
        }
    }

    fn splittable(&self, t: &ClassCounts) -> bool {
        t.n >= 2.0 * self.min_leaf && t.pos > 0.0 && t.pos < t.n
    }

    fn gain(&self, t: &ClassCounts, l: &ClassCounts, r: &ClassCounts) -> Option<f64> {
        if l.n < self.min_leaf || r.n < self.min_leaf {
            return None;
        }
        Some(gini(t.pos, t.n) - (l.n * gini(l.pos, l.n) + r.n * gini(r.pos, r.n)) / t.n)
    }

    fn leaf_value(&self, t: &ClassCounts) -> f64 {
        if t.n > 0.0 {
            t.pos / t.n
        } else {
            0.5
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 8,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub params: TreeParams,
    pub n_features: usize,
    pub tree: Tree,
}

impl Scorer for DecisionTree {
    /// Positive fraction of the training rows in the leaf reached.
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.tree.leaf_value(x)
    }
}

fn gini_tree(ds: &Dataset, rows: &[(usize, f64)], params: &TreeParams, per_node: Option<usize>, rng: Option<&mut crate::rng::Rng>) -> Tree {
    let criterion = Gini {
        labels: ds.labels(),
        min_leaf: params.min_leaf.max(1) as f64,
    };
    let settings = GrowSettings {
        max_depth: params.max_depth,
        features_per_node: per_node,
    };
    grow(ds, rows, &criterion, &settings, rng)
}

pub fn train_decision_tree(ds: &Dataset, params: &TreeParams) -> Result<DecisionTree> {
    ds.ensure_trainable()?;
    let rows: Vec<(usize, f64)> = (0..ds.n_rows()).map(|i| (i, 1.0)).collect();
    Ok(DecisionTree {
        params: params.clone(),
        n_features: ds.n_cols(),
        tree: gini_tree(ds, &rows, params, None, None),
    })
}

/// Features examined at each split of a forest tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
    Fraction(f64),
}

impl MaxFeatures {
    pub fn count(self, d: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().round() as usize,
            MaxFeatures::Log2 => (d as f64).log2().round() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Fraction(f) => (f * d as f64).round() as usize,
        };
        k.clamp(1, d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 8,
            min_leaf: 5,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub params: ForestParams,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

impl Scorer for RandomForest {
    /// Fraction of trees voting positive (leaf positive fraction >= 0.5).
    fn predict_proba(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.leaf_value(x) >= 0.5).count();
        votes as f64 / self.trees.len().max(1) as f64
    }
}

pub fn train_random_forest(ds: &Dataset, params: &ForestParams, seed: u64) -> Result<RandomForest> {
    ds.ensure_trainable()?;
    if params.n_trees == 0 {
        return Err(Error::Config("random forest needs at least one tree".into()));
    }
    let n = ds.n_rows();
    let d = ds.n_cols();
    let per_node = params.max_features.count(d);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, "forest_tree", t as u64);
            let rows: Vec<(usize, f64)> = if params.bootstrap {
                let mut counts = vec![0u32; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
                counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(i, &c)| (i, f64::from(c)))
                    .collect()
            } else {
                (0..n).map(|i| (i, 1.0)).collect()
            };
            gini_tree(ds, &rows, &tree_params, Some(per_node), Some(&mut rng))
        })
        .collect();
    Ok(RandomForest {
        params: params.clone(),
        n_features: d,
        trees,
    })
}
