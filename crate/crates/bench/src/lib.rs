//! Fixed inputs shared by the benchmarks.

use imbf_core::data::make_synthetic;
use imbf_core::Dataset;

/// Imbalanced blobs shaped like a scaled-down transaction table.
pub fn imbalanced(n_major: usize, n_minor: usize, d: usize) -> Dataset {
    make_synthetic(n_major, n_minor, d, 1.5, 42)
}

/// Minority rows of `ds` as a flat row-major buffer.
pub fn minority_pool(ds: &Dataset) -> Vec<f64> {
    ds.rows()
        .zip(ds.labels())
        .filter(|(_, &y)| y == 1)
        .flat_map(|(r, _)| r.iter().copied())
        .collect()
}

/// Scores and labels with a moderate amount of overlap.
pub fn scored(n: usize) -> (Vec<u8>, Vec<f64>) {
    let ds = make_synthetic(n / 2, n - n / 2, 1, 1.0, 7);
    (ds.labels().to_vec(), ds.features().to_vec())
}
