use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_for;

/// Assignment of every row to one of `k` folds, stored in row order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub row_ids: Vec<u64>,
}

impl FoldPlan {
    /// Row positions outside and inside fold `f`.
    pub fn train_test_indices(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..self.assignments.len()).partition(|&i| self.assignments[i] == f);
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Stratified k-fold split.
///
/// Each class is shuffled under `seed` and dealt round-robin; the negative
/// class continues dealing where the positives stopped so fold sizes differ
/// by at most one as well.
pub fn stratified_kfold(ds: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("fold count must be at least 2, got {k}")));
    }
    let mut pos = ds.class_indices(1);
    let mut neg = ds.class_indices(0);
    let minority = pos.len().min(neg.len());
    if minority < k {
        return Err(Error::InsufficientMinority { minority, k });
    }
    let mut rng = rng_for(seed, "stratified_kfold", 0);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut assignments = vec![0; ds.n_rows()];
    for (slot, &i) in pos.iter().chain(&neg).enumerate() {
        assignments[i] = slot % k;
    }
    Ok(FoldPlan {
        k,
        assignments,
        row_ids: ds.row_ids().to_vec(),
    })
}
