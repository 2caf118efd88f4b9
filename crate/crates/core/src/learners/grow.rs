//! Level-wise exact greedy tree growth shared by CART and boosted trees.
//!
//! Every feature is sorted once; each level then scans each sorted column a
//! single time, accumulating running statistics per open node. Candidate
//! thresholds sit midway between consecutive distinct values inside a node.
//! Ties keep the earlier candidate, so the lowest feature index and then the
//! lowest threshold win.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::rng::Rng;

/// Gains closer than this are treated as equal.
pub(crate) const GAIN_TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Binary tree stored as a node arena rooted at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + rec(t, left).max(rec(t, right)),
            }
        }
        rec(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Additive node statistics and the split criterion over them.
pub(crate) trait Criterion {
    type Stats: Copy + Default;

    fn add(&self, s: &mut Self::Stats, row: usize, weight: f64);

    fn diff(&self, total: &Self::Stats, left: &Self::Stats) -> Self::Stats;

    /// Whether a node with these statistics may be split at all.
    fn splittable(&self, total: &Self::Stats) -> bool;

    /// Gain of a split, or `None` when it violates a child constraint.
    fn gain(&self, total: &Self::Stats, left: &Self::Stats, right: &Self::Stats) -> Option<f64>;

    fn leaf_value(&self, total: &Self::Stats) -> f64;
}

pub(crate) struct GrowSettings {
    pub max_depth: usize,
    /// Features drawn per node; `None` considers all of them.
    pub features_per_node: Option<usize>,
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// Grows a tree on `rows` (dataset positions with multiplicities).
pub(crate) fn grow<C: Criterion>(
    ds: &Dataset,
    rows: &[(usize, f64)],
    criterion: &C,
    settings: &GrowSettings,
    mut rng: Option<&mut Rng>,
) -> Tree {
    let d = ds.n_cols();
    let n = rows.len();
    let orders: Vec<Vec<u32>> = (0..d)
        .map(|f| {
            let mut o: Vec<u32> = (0..n as u32).collect();
            o.sort_by(|&a, &b| {
                ds.row(rows[a as usize].0)[f]
                    .total_cmp(&ds.row(rows[b as usize].0)[f])
                    .then(a.cmp(&b))
            });
            o
        })
        .collect();

    let mut root = C::Stats::default();
    for &(r, w) in rows {
        criterion.add(&mut root, r, w);
    }
    let mut nodes = vec![Node::Leaf {
        value: criterion.leaf_value(&root),
    }];
    let mut totals = vec![root];
    let mut node_of: Vec<usize> = vec![0; n];
    let mut open: Vec<usize> = vec![0];

    for _depth in 0..settings.max_depth {
        let candidates: Vec<usize> = open.iter().copied().filter(|&m| criterion.splittable(&totals[m])).collect();
        if candidates.is_empty() {
            break;
        }
        let n_nodes = nodes.len();
        let mut active = vec![false; n_nodes];
        let mut allowed: Vec<Option<Vec<bool>>> = vec![None; n_nodes];
        for &m in &candidates {
            active[m] = true;
            if let (Some(k), Some(rng)) = (settings.features_per_node, rng.as_deref_mut()) {
                if k < d {
                    let mut mask = vec![false; d];
                    for f in sample(rng, d, k) {
                        mask[f] = true;
                    }
                    allowed[m] = Some(mask);
                }
            }
        }

        let mut best: Vec<Option<Best>> = (0..n_nodes).map(|_| None).collect();
        let mut running = vec![C::Stats::default(); n_nodes];
        let mut last = vec![f64::NAN; n_nodes];
        for (f, order) in orders.iter().enumerate() {
            for &m in &candidates {
                running[m] = C::Stats::default();
                last[m] = f64::NAN;
            }
            for &p in order {
                let p = p as usize;
                let m = node_of[p];
                if !active[m] || allowed[m].as_ref().is_some_and(|mask| !mask[f]) {
                    continue;
                }
                let (row, w) = rows[p];
                let v = ds.row(row)[f];
                if !last[m].is_nan() && v > last[m] {
                    let right = criterion.diff(&totals[m], &running[m]);
                    if let Some(g) = criterion.gain(&totals[m], &running[m], &right) {
                        let better = match &best[m] {
                            None => true,
                            Some(b) => g > b.gain + GAIN_TIE_EPS,
                        };
                        if better {
                            best[m] = Some(Best {
                                gain: g,
                                feature: f,
                                threshold: midpoint(last[m], v),
                            });
                        }
                    }
                }
                criterion.add(&mut running[m], row, w);
                last[m] = v;
            }
        }

        let mut next_open = Vec::new();
        let mut child_of: Vec<Option<(usize, usize)>> = vec![None; n_nodes];
        for &m in &candidates {
            let Some(b) = best[m].take() else { continue };
            if b.gain <= 0.0 {
                continue;
            }
            let left = nodes.len();
            let right = left + 1;
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            totals.push(C::Stats::default());
            totals.push(C::Stats::default());
            nodes[m] = Node::Split {
                feature: b.feature,
                threshold: b.threshold,
                left,
                right,
            };
            child_of[m] = Some((left, right));
            next_open.extend([left, right]);
        }
        if next_open.is_empty() {
            break;
        }
        for (p, &(row, w)) in rows.iter().enumerate() {
            let m = node_of[p];
            if let (Some((l, r)), Node::Split { feature, threshold, .. }) = (child_of[m], &nodes[m]) {
                let c = if ds.row(row)[*feature] <= *threshold { l } else { r };
                node_of[p] = c;
                criterion.add(&mut totals[c], row, w);
            }
        }
        for &c in &next_open {
            nodes[c] = Node::Leaf {
                value: criterion.leaf_value(&totals[c]),
            };
        }
        open = next_open;
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_stays_below_upper_value() {
        assert_eq!(midpoint(1.0, 3.0), 2.0);
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        assert_eq!(midpoint(a, b), a);
    }
}
