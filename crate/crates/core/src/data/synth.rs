use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::Result;
use crate::rng::rng_for;

/// Two isotropic Gaussian blobs: majority (label 0) at the origin and minority
/// (label 1) at `separation` along every axis. Majority rows come first.
pub fn make_synthetic(n_major: usize, n_minor: usize, d: usize, separation: f64, seed: u64) -> Dataset {
    let mut rng = rng_for(seed, "make_synthetic", 0);
    let n = n_major + n_minor;
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let minority = i >= n_major;
        let shift = if minority { separation } else { 0.0 };
        for _ in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            features.push(z + shift);
        }
        labels.push(u8::from(minority));
    }
    let names = (1..=d).map(|j| format!("x{j}")).collect();
    Dataset::new(features, d, labels, names).expect("generator produces consistent shapes")
}

/// Keeps every positive row and at most `max_majority` negative rows drawn
/// uniformly without replacement. Row order and ids are preserved.
pub fn subsample_majority(ds: &Dataset, max_majority: usize, seed: u64) -> Result<Dataset> {
    let neg = ds.class_indices(0);
    if neg.len() <= max_majority {
        return Ok(ds.clone());
    }
    let mut rng = rng_for(seed, "subsample_majority", 0);
    let mut keep_neg = vec![false; ds.n_rows()];
    for j in sample(&mut rng, neg.len(), max_majority) {
        keep_neg[neg[j]] = true;
    }
    let keep: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.label(i) == 1 || keep_neg[i]).collect();
    Ok(ds.subset(&keep))
}
