use crate::error::{Error, Result};

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest rows to row `query` of the row-major `points`, excluding the
/// query itself. Sorted by ascending Euclidean distance, ties by row index.
pub fn knn_indices(points: &[f64], dim: usize, query: usize, k: usize) -> Result<Vec<usize>> {
    let n = points.len() / dim;
    if k >= n {
        return Err(Error::NeighborCount { k, n });
    }
    let q = &points[query * dim..(query + 1) * dim];
    let mut cand: Vec<(f64, usize)> = points
        .chunks_exact(dim)
        .enumerate()
        .filter(|&(i, _)| i != query)
        .map(|(i, p)| (squared_distance(q, p), i))
        .collect();
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k, by_dist);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_dist);
    Ok(cand.into_iter().map(|(_, i)| i).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_examples() {
        let pts = [0.0, 1.0, 10.0];
        assert_eq!(knn_indices(&pts, 1, 0, 1).unwrap(), vec![1]);
        assert_eq!(knn_indices(&pts, 1, 1, 2).unwrap(), vec![0, 2]);
        assert!(matches!(knn_indices(&pts, 1, 0, 3), Err(Error::NeighborCount { k: 3, n: 3 })));
    }

    #[test]
    fn ties_break_by_index() {
        let pts = [0.0, 1.0, -1.0, 1.0];
        assert_eq!(knn_indices(&pts, 1, 0, 3).unwrap(), vec![1, 2, 3]);
    }
}
