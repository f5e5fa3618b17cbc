//! System-wide MDP over the most visited joint states.
//!
//! Clients share one kernel and evolve independently given their own
//! action, so joint transitions are products of per-client rows. Joint
//! states are stored in canonical (sorted) form because clients are
//! interchangeable; an action is a set of positions in that sorted tuple.
//! Next states outside the popular set are replaced by their nearest
//! popular state in the L2 norm of concatenated per-client centroids.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::client::{ClientModel, ValueFunction, ViSettings};
use crate::error::{Error, Result};
use crate::model::{ClientAction, Label};

/// Sort a joint state, returning the sorted labels and, for each sorted
/// position, the index of the client it came from. Equal labels keep
/// client order.
pub fn canonical(labels: &[Label]) -> (Vec<Label>, Vec<usize>) {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| (labels[i], i));
    (order.iter().map(|&i| labels[i]).collect(), order)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopularStateSet {
    pub states: Vec<Vec<Label>>,
}

impl PopularStateSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn num_clients(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn position(&self, s: &[Label]) -> Option<usize> {
        self.states.iter().position(|p| p.as_slice() == s)
    }
}

/// The `k` most frequent joint states, ties broken by first occurrence.
pub fn select_popular_states(records: &[Vec<Label>], k: usize) -> Result<PopularStateSet> {
    if records.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if k == 0 {
        return Err(Error::config("planner.popular_states", "must be >= 1"));
    }
    let mut seen: HashMap<&[Label], (usize, usize)> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        seen.entry(r.as_slice()).or_insert((0, i)).0 += 1;
    }
    let mut ranked: Vec<(&[Label], usize, usize)> =
        seen.into_iter().map(|(s, (c, first))| (s, c, first)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    Ok(PopularStateSet {
        states: ranked.into_iter().take(k).map(|(s, _, _)| s.to_vec()).collect(),
    })
}

fn sq_distance(a: &[Label], b: &[Label], centroids: &[[f64; 3]]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let (cx, cy) = (centroids[x], centroids[y]);
            (0..3).map(|i| (cx[i] - cy[i]).powi(2)).sum::<f64>()
        })
        .sum()
}

/// Index of the member of `sp` closest to `s`; lowest index on ties.
pub fn project_popular(s: &[Label], sp: &PopularStateSet, centroids: &[[f64; 3]]) -> usize {
    assert!(!sp.is_empty(), "popular set is empty");
    let mut best = (0, f64::INFINITY);
    for (i, p) in sp.states.iter().enumerate() {
        let d = sq_distance(s, p, centroids);
        if d < best.1 {
            best = (i, d);
            if d == 0.0 {
                break;
            }
        }
    }
    best.0
}

/// Every set of at most `limit` winners among `n` positions; sets with
/// more winners come first, then lexicographic order.
pub fn feasible_actions(n: usize, limit: usize) -> Vec<Vec<usize>> {
    fn combos(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            combos(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for k in (0..=limit.min(n)).rev() {
        combos(n, k, 0, &mut Vec::new(), &mut out);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemSettings {
    pub vi: ViSettings,
    /// Product-kernel samples per (popular state, action).
    pub samples: usize,
    pub seed: u64,
}

impl Default for SystemSettings {
    fn default() -> Self {
        SystemSettings {
            vi: ViSettings::default(),
            samples: 1000,
            seed: 0,
        }
    }
}

/// Optimal assignment for each popular state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemPolicy {
    pub popular: PopularStateSet,
    pub actions: Vec<Vec<usize>>,
    /// Index into `actions` for each popular state.
    pub choice: Vec<usize>,
    pub values: ValueFunction,
}

impl SystemPolicy {
    pub fn num_clients(&self) -> usize {
        self.popular.num_clients()
    }

    /// Winners (as client indices into `labels`) for an arbitrary joint state.
    pub fn winners_for(&self, labels: &[Label], centroids: &[[f64; 3]]) -> Vec<usize> {
        let (sorted, order) = canonical(labels);
        let i = project_popular(&sorted, &self.popular, centroids);
        let mut w: Vec<usize> = self.actions[self.choice[i]].iter().map(|&p| order[p]).collect();
        w.sort_unstable();
        w
    }
}

/// Sparse system-kernel row: `(popular index, probability)`.
type SysRow = Vec<(usize, f64)>;

struct RowBuilder<'a> {
    model: &'a ClientModel,
    sp: &'a PopularStateSet,
    centroids: &'a [[f64; 3]],
    cache: HashMap<Vec<Label>, usize>,
}

impl<'a> RowBuilder<'a> {
    fn project(&mut self, next: &[Label]) -> usize {
        let mut key = next.to_vec();
        key.sort_unstable();
        if let Some(&i) = self.cache.get(&key) {
            return i;
        }
        let i = project_popular(&key, self.sp, self.centroids);
        self.cache.insert(key, i);
        i
    }

    fn per_client_rows(&self, state: &[Label], action: &[usize]) -> Vec<&'a [(Label, f64)]> {
        state
            .iter()
            .enumerate()
            .map(|(pos, &s)| {
                let a = if action.contains(&pos) {
                    ClientAction::Win
                } else {
                    ClientAction::Lose
                };
                self.model.row(s, a)
            })
            .collect()
    }

    /// Enumerate the product exactly when its support is at most `budget`,
    /// otherwise draw `budget` samples.
    fn build(&mut self, state: &[Label], action: &[usize], budget: usize, rng: &mut ChaCha8Rng) -> SysRow {
        let rows = self.per_client_rows(state, action);
        let support = rows
            .iter()
            .try_fold(1usize, |acc, r| acc.checked_mul(r.len()))
            .unwrap_or(usize::MAX);
        let mut acc: HashMap<usize, f64> = HashMap::new();
        let mut next = vec![0; state.len()];
        if support <= budget {
            let mut idx = vec![0usize; rows.len()];
            loop {
                let mut p = 1.0;
                for (c, r) in rows.iter().enumerate() {
                    next[c] = r[idx[c]].0;
                    p *= r[idx[c]].1;
                }
                if p > 0.0 {
                    *acc.entry(self.project(&next)).or_default() += p;
                }
                // odometer increment
                let mut c = 0;
                while c < rows.len() {
                    idx[c] += 1;
                    if idx[c] < rows[c].len() {
                        break;
                    }
                    idx[c] = 0;
                    c += 1;
                }
                if c == rows.len() {
                    break;
                }
            }
        } else {
            let w = 1.0 / budget as f64;
            for _ in 0..budget {
                for (c, r) in rows.iter().enumerate() {
                    let u: f64 = rng.gen();
                    let mut cum = 0.0;
                    next[c] = r[r.len() - 1].0;
                    for &(l, p) in r.iter() {
                        cum += p;
                        if u < cum {
                            next[c] = l;
                            break;
                        }
                    }
                }
                *acc.entry(self.project(&next)).or_default() += w;
            }
        }
        let mut row: SysRow = acc.into_iter().collect();
        row.sort_by_key(|r| r.0);
        row
    }
}

/// Solve the joint MDP over `sp`: reward is the expected total next-state
/// QoE, rows come from the product of per-client kernels projected onto
/// `sp`, and at most `limit` clients win per period.
pub fn value_iteration_system(
    model: &ClientModel,
    sp: &PopularStateSet,
    limit: usize,
    centroids: &[[f64; 3]],
    settings: &SystemSettings,
) -> Result<SystemPolicy> {
    if sp.is_empty() {
        return Err(Error::config("planner.popular_states", "popular set is empty"));
    }
    if settings.samples == 0 {
        return Err(Error::config("planner.samples", "must be > 0"));
    }
    let n_clients = sp.num_clients();
    let actions = feasible_actions(n_clients, limit);
    let n_actions = actions.len();

    // (rewards, rows) per popular state, built in parallel with a
    // per-(state, action) generator so the result is schedule independent
    let built: Vec<(Vec<f64>, Vec<SysRow>)> = sp
        .states
        .par_iter()
        .enumerate()
        .map(|(i, state)| {
            let mut builder = RowBuilder {
                model,
                sp,
                centroids,
                cache: HashMap::new(),
            };
            let mut rewards = Vec::with_capacity(n_actions);
            let mut rows = Vec::with_capacity(n_actions);
            for (ai, action) in actions.iter().enumerate() {
                let r: f64 = state
                    .iter()
                    .enumerate()
                    .map(|(pos, &s)| {
                        let a = if action.contains(&pos) {
                            ClientAction::Win
                        } else {
                            ClientAction::Lose
                        };
                        model.reward(s, a)
                    })
                    .sum();
                let stream = (i * n_actions + ai) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
                rng.set_stream(stream);
                rewards.push(r);
                rows.push(builder.build(state, action, settings.samples, &mut rng));
            }
            (rewards, rows)
        })
        .collect();

    let gamma = settings.vi.gamma;
    let q = |i: usize, a: usize, v: &[f64]| -> f64 {
        let (rewards, rows) = &built[i];
        rewards[a] + gamma * rows[a].iter().map(|&(j, p)| p * v[j]).sum::<f64>()
    };
    let argmax = |i: usize, v: &[f64]| -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for a in 0..n_actions {
            let val = q(i, a, v);
            if val > best.1 + 1e-12 {
                best = (a, val);
            }
        }
        best
    };

    let n = sp.len();
    let mut v = vec![0.0; n];
    let mut deltas = Vec::new();
    let mut converged = false;
    for _ in 0..settings.vi.max_sweeps {
        let next: Vec<f64> = (0..n).map(|i| argmax(i, &v).1).collect();
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        deltas.push(delta);
        if delta <= settings.vi.tol {
            converged = true;
            break;
        }
    }
    let choice = (0..n).map(|i| argmax(i, &v).0).collect();
    Ok(SystemPolicy {
        popular: sp.clone(),
        actions,
        choice,
        values: ValueFunction {
            values: v,
            gamma,
            converged,
            sweeps: deltas.len(),
            deltas,
        },
    })
}
