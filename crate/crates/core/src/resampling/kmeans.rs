use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knn::squared_distance;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_for};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansParams {
    /// Cluster count; `None` picks `max(2, round(sqrt(n / 2)))`.
    pub k: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
    /// Independent k-means++ restarts; the lowest WCSS wins.
    pub restarts: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            k: None,
            max_iter: 100,
            tol: 1e-4,
            restarts: 1,
        }
    }
}

/// A fitted k-means partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub dim: usize,
    /// Row-major `k x dim`.
    pub centroids: Vec<f64>,
    pub assignments: Vec<usize>,
    pub wcss: f64,
    pub iterations_run: usize,
    /// WCSS after initialization and after every Lloyd iteration.
    pub wcss_history: Vec<f64>,
}

impl KMeansModel {
    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }
}

pub fn default_cluster_count(n_rows: usize) -> usize {
    ((n_rows as f64 / 2.0).sqrt().round() as usize).max(2)
}

pub fn count_distinct_rows(points: &[f64], dim: usize) -> usize {
    let mut rows: Vec<&[f64]> = points.chunks_exact(dim).collect();
    let cmp = |a: &&[f64], b: &&[f64]| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    rows.sort_unstable_by(cmp);
    rows.dedup_by(|a, b| cmp(a, b).is_eq());
    rows.len()
}

/// Within-cluster sum of squared distances.
pub fn wcss(points: &[f64], dim: usize, centroids: &[f64], assignments: &[usize]) -> f64 {
    points
        .chunks_exact(dim)
        .zip(assignments)
        .map(|(p, &a)| squared_distance(p, &centroids[a * dim..(a + 1) * dim]))
        .sum()
}

fn nearest(p: &[f64], centroids: &[f64], dim: usize) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let d = squared_distance(p, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn assign(points: &[f64], dim: usize, centroids: &[f64]) -> Vec<usize> {
    points
        .par_chunks(dim)
        .with_min_len(256)
        .map(|p| nearest(p, centroids, dim))
        .collect()
}

fn kmeans_plus_plus(points: &[f64], dim: usize, k: usize, seed: u64) -> Vec<f64> {
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut rng = rng_for(seed, "kmeans++", 0);
    let mut centroids = Vec::with_capacity(k * dim);
    centroids.extend_from_slice(row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(row(i), &centroids[..dim])).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
        }
        let pick = pick.expect("distinct points remain when k <= distinct count");
        let c = row(pick).to_vec();
        for (i, v) in d2.iter_mut().enumerate() {
            *v = v.min(squared_distance(row(i), &c));
        }
        centroids.extend_from_slice(&c);
    }
    centroids
}

/// Lloyd's algorithm from a seeded k-means++ start.
///
/// Stops when the largest centroid shift drops below `tol`, when assignments
/// stop changing, or after `max_iter` iterations. Nearest-centroid ties go to
/// the lowest centroid index. An empty cluster is re-seeded at the point
/// farthest from its own centroid.
pub fn kmeans_fit(points: &[f64], dim: usize, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeansModel> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::Shape("points are not a whole number of rows".into()));
    }
    let n = points.len() / dim;
    if k == 0 {
        return Err(Error::Config("k-means needs k >= 1".into()));
    }
    let distinct = count_distinct_rows(points, dim);
    if k > distinct {
        return Err(Error::ClusterCount { k, distinct });
    }
    let row = |i: usize| &points[i * dim..(i + 1) * dim];

    let mut centroids = kmeans_plus_plus(points, dim, k, seed);
    let mut assignments = assign(points, dim, &centroids);
    let mut history = vec![wcss(points, dim, &centroids, &assignments)];
    let mut iterations_run = 0;

    for _ in 0..max_iter {
        iterations_run += 1;
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &a) in assignments.iter().enumerate() {
            counts[a] += 1;
            for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(row(i)) {
                *s += v;
            }
        }
        let mut next = centroids.clone();
        for j in 0..k {
            if counts[j] > 0 {
                let c = counts[j] as f64;
                for (t, s) in next[j * dim..(j + 1) * dim].iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                    *t = s / c;
                }
            }
        }
        let mut used = Vec::new();
        for j in (0..k).filter(|&j| counts[j] == 0) {
            let far = (0..n)
                .filter(|i| !used.contains(i))
                .map(|i| {
                    let a = assignments[i];
                    (squared_distance(row(i), &next[a * dim..(a + 1) * dim]), i)
                })
                .fold((f64::NEG_INFINITY, 0), |best, cur| if cur.0 > best.0 { cur } else { best });
            used.push(far.1);
            next[j * dim..(j + 1) * dim].copy_from_slice(row(far.1));
        }
        let shift = (0..k)
            .map(|j| squared_distance(&centroids[j * dim..(j + 1) * dim], &next[j * dim..(j + 1) * dim]).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        let new_assignments = assign(points, dim, &centroids);
        let unchanged = new_assignments == assignments;
        assignments = new_assignments;
        history.push(wcss(points, dim, &centroids, &assignments));
        if shift < tol || unchanged {
            break;
        }
    }

    Ok(KMeansModel {
        k,
        dim,
        wcss: *history.last().expect("history starts non-empty"),
        centroids,
        assignments,
        iterations_run,
        wcss_history: history,
    })
}

/// Best of `restarts` runs (at least one), seeds derived from `seed`.
pub fn kmeans_fit_best(
    points: &[f64],
    dim: usize,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
    restarts: usize,
) -> Result<KMeansModel> {
    let mut best: Option<KMeansModel> = None;
    for r in 0..restarts.max(1) {
        let m = kmeans_fit(points, dim, k, derive_seed(seed, "kmeans_restart", r as u64), max_iter, tol)?;
        if best.as_ref().is_none_or(|b| m.wcss < b.wcss) {
            best = Some(m);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_is_the_mean() {
        let m = kmeans_fit(&[0.0, 2.0], 1, 1, 0, 100, 1e-4).unwrap();
        assert_eq!(m.centroids, vec![1.0]);
        assert_eq!(m.wcss, 2.0);
    }

    #[test]
    fn one_cluster_per_point() {
        let pts = [0.0, 0.0, 5.0, 1.0, -3.0, 2.0];
        let m = kmeans_fit(&pts, 2, 3, 11, 100, 1e-4).unwrap();
        assert_eq!(m.wcss, 0.0);
    }

    #[test]
    fn three_points_two_clusters() {
        // Partitions of {0,1,4}: {0}{1,4} -> 4.5, {1}{0,4} -> 8, {4}{0,1} -> 0.5.
        for seed in 0..10 {
            let m = kmeans_fit_best(&[0.0, 1.0, 4.0], 1, 2, seed, 100, 1e-4, 5).unwrap();
            assert_eq!(m.wcss, 0.5);
            assert_eq!(m.assignments[0], m.assignments[1]);
            assert_ne!(m.assignments[0], m.assignments[2]);
        }
    }

    #[test]
    fn too_many_clusters() {
        assert!(matches!(
            kmeans_fit(&[1.0, 1.0, 2.0], 1, 3, 0, 10, 1e-4),
            Err(Error::ClusterCount { k: 3, distinct: 2 })
        ));
    }

    #[test]
    fn default_k_heuristic() {
        assert_eq!(default_cluster_count(2), 2);
        assert_eq!(default_cluster_count(200), 10);
        assert_eq!(default_cluster_count(90_000), 212);
    }

    #[test]
    fn model_invariants_hold() {
        let pts: Vec<f64> = (0..120).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let m = kmeans_fit(&pts, 2, 5, 3, 100, 1e-4).unwrap();
        let recomputed = wcss(&pts, 2, &m.centroids, &m.assignments);
        assert!((recomputed - m.wcss).abs() <= 1e-9 * m.wcss.max(1.0));
        for (p, &a) in pts.chunks_exact(2).zip(&m.assignments) {
            assert_eq!(nearest(p, &m.centroids, 2), a);
        }
    }
}
