use serde::{Deserialize, Serialize};

use super::client::ValueFunction;
use crate::model::Label;

/// Position of each state when states are sorted by ascending value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMap {
    pub ranks: Vec<usize>,
}

impl IndexMap {
    pub fn rank(&self, s: Label) -> Option<usize> {
        self.ranks.get(s).copied()
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Labels ordered from the highest rank down.
    pub fn top(&self, k: usize) -> Vec<Label> {
        let mut by_rank = vec![0; self.ranks.len()];
        for (label, &r) in self.ranks.iter().enumerate() {
            by_rank[r] = label;
        }
        by_rank.into_iter().rev().take(k).collect()
    }
}

/// Rank states by ascending value; equal values are ordered by label.
pub fn index_of(v: &ValueFunction) -> IndexMap {
    let mut order: Vec<Label> = (0..v.values.len()).collect();
    order.sort_by(|&a, &b| v.values[a].total_cmp(&v.values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0; order.len()];
    for (rank, label) in order.into_iter().enumerate() {
        ranks[label] = rank;
    }
    IndexMap { ranks }
}

/// Kendall tau-b between two score vectors over the same items.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = (x[i] - x[j]).partial_cmp(&0.0).unwrap_or(std::cmp::Ordering::Equal);
            let dy = (y[i] - y[j]).partial_cmp(&0.0).unwrap_or(std::cmp::Ordering::Equal);
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {}
                (Equal, _) => ties_x += 1,
                (_, Equal) => ties_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let denom = (((concordant + discordant + ties_x) * (concordant + discordant + ties_y)) as f64).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (concordant - discordant) as f64 / denom
    }
}

/// Kendall tau between `base` and `other` restricted to the `k` states that
/// `base` ranks highest.
pub fn top_k_consistency(base: &IndexMap, other: &IndexMap, k: usize) -> f64 {
    let top = base.top(k);
    let x: Vec<f64> = top.iter().map(|&s| base.ranks[s] as f64).collect();
    let y: Vec<f64> = top.iter().map(|&s| other.ranks[s] as f64).collect();
    kendall_tau(&x, &y)
}
