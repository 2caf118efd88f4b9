use imbf_core::resampling::{kmeans_fit, kmeans_fit_best, wcss};
use imbf_core::rng::rng_for;
use proptest::prelude::*;
use rand::Rng;

/// Minimum WCSS over every assignment of `n` 1-D or 2-D points to `k` labels.
fn brute_force_wcss(points: &[f64], dim: usize, k: usize) -> f64 {
    let n = points.len() / dim;
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    loop {
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for j in 0..dim {
                sums[l * dim + j] += points[i * dim + j];
            }
        }
        if counts.iter().all(|&c| c > 0) {
            let mut j_val = 0.0;
            for (i, &l) in labels.iter().enumerate() {
                for j in 0..dim {
                    let c = sums[l * dim + j] / counts[l] as f64;
                    j_val += (points[i * dim + j] - c).powi(2);
                }
            }
            best = best.min(j_val);
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

#[test]
fn three_point_two_partition() {
    let pts = [0.0, 1.0, 4.0];
    assert_eq!(brute_force_wcss(&pts, 1, 2), 0.5);
    let m = kmeans_fit(&pts, 1, 2, 7, 100, 1e-4).unwrap();
    assert!((m.wcss - 0.5).abs() < 1e-12);
    assert_eq!(m.assignments[0], m.assignments[1]);
    assert_ne!(m.assignments[0], m.assignments[2]);
}

#[test]
fn too_many_clusters_is_an_error() {
    assert!(kmeans_fit(&[1.0, 1.0, 2.0], 1, 3, 0, 100, 1e-4).is_err());
}

#[test]
fn restarted_runs_reach_the_optimum() {
    let mut rng = rng_for(2024, "tiny_kmeans", 0);
    let mut hits = 0;
    for inst in 0..20 {
        let n = rng.random_range(4..=8);
        let k = rng.random_range(2..=3);
        let dim = 2;
        let pts: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let optimum = brute_force_wcss(&pts, dim, k);
        let m = kmeans_fit_best(&pts, dim, k, inst, 100, 1e-4, 20).unwrap();
        if (m.wcss - optimum).abs() <= 1e-9 * optimum.max(1.0) {
            hits += 1;
        }
    }
    assert!(hits >= 19, "optimum reached on {hits}/20 instances");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn wcss_never_increases(
        pts in proptest::collection::vec(-20.0f64..20.0, 20..200),
        k in 1usize..6,
        seed in any::<u64>(),
    ) {
        let dim = 2;
        let n = pts.len() / dim;
        let pts = &pts[..n * dim];
        let m = kmeans_fit(pts, dim, k, seed, 100, 1e-4).unwrap();
        for w in m.wcss_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", m.wcss_history);
        }
        let recomputed = wcss(pts, dim, &m.centroids, &m.assignments);
        prop_assert!((recomputed - m.wcss).abs() <= 1e-9 * m.wcss.max(1.0));
        // Each row sits with its nearest centroid.
        for i in 0..n {
            let row = &pts[i * dim..(i + 1) * dim];
            let d = |c: usize| -> f64 {
                m.centroid(c).iter().zip(row).map(|(a, b)| (a - b).powi(2)).sum()
            };
            let own = d(m.assignments[i]);
            for c in 0..m.k {
                prop_assert!(own <= d(c));
            }
        }
    }
}
