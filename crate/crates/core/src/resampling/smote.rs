use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knn::knn_indices;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Desired minority/majority count ratio after synthesis.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

impl SmoteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::Config("k_neighbors must be at least 1".into()));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "target_ratio must lie in (0, 1], got {}",
                self.target_ratio
            )));
        }
        Ok(())
    }
}

/// One interpolated row with the pool indices of its parents and the gap drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub features: Vec<f64>,
    pub base: usize,
    pub neighbor: usize,
    pub gap: f64,
}

/// `x_i + gap * (x_l - x_i)`.
pub fn smote_interpolate(x_i: &[f64], x_l: &[f64], gap: f64) -> Vec<f64> {
    x_i.iter().zip(x_l).map(|(a, b)| a + gap * (b - a)).collect()
}

/// Rows needed to lift `n_minority` to `ceil(target_ratio * n_majority)`.
pub fn smote_deficit(n_minority: usize, n_majority: usize, target_ratio: f64) -> usize {
    let target = (target_ratio * n_majority as f64).ceil() as usize;
    target.saturating_sub(n_minority)
}

/// Generates `count` synthetic rows from the row-major minority `pool`.
///
/// Base rows are taken round-robin in pool order; each draws one of its
/// `k_neighbors` nearest pool neighbors uniformly and a gap uniformly from
/// `[0, 1)`. When the pool is smaller than `k_neighbors + 1` the neighbor count
/// shrinks to `pool - 1`.
pub fn smote_generate(
    pool: &[f64],
    dim: usize,
    count: usize,
    k_neighbors: usize,
    rng: &mut Rng,
) -> Result<Vec<SyntheticSample>> {
    let n = pool.len() / dim;
    if n < 2 {
        return Err(Error::SmoteUnderflow(n));
    }
    if k_neighbors == 0 {
        return Err(Error::Config("k_neighbors must be at least 1".into()));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let k = k_neighbors.min(n - 1);
    let n_bases = count.min(n);
    let neighbors: Vec<Vec<usize>> = (0..n_bases)
        .into_par_iter()
        .map(|q| knn_indices(pool, dim, q, k))
        .collect::<Result<_>>()?;

    let row = |i: usize| &pool[i * dim..(i + 1) * dim];
    let mut out = Vec::with_capacity(count);
    for s in 0..count {
        let base = s % n;
        let nb = &neighbors[base];
        let neighbor = nb[rng.random_range(0..nb.len())];
        let gap: f64 = rng.random();
        out.push(SyntheticSample {
            features: smote_interpolate(row(base), row(neighbor), gap),
            base,
            neighbor,
            gap,
        });
    }
    Ok(out)
}
