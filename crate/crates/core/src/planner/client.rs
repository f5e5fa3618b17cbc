use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::TransitionKernel;
use crate::market::MarketCurves;
use crate::model::{ClientAction, DiscretizationConfig, Label};

/// Discount, stopping tolerance and sweep budget for value iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViSettings {
    pub gamma: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for ViSettings {
    fn default() -> Self {
        ViSettings {
            gamma: 0.9,
            tol: 1e-6,
            max_sweeps: 10_000,
        }
    }
}

impl ViSettings {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config("planner.gamma", "must be in [0, 1)"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("planner.tol", "must be > 0"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::config("planner.max_sweeps", "must be > 0"));
        }
        Ok(())
    }
}

/// Tabular single-client MDP: a transition row and an immediate reward for
/// each (state, action).
#[derive(Debug, Clone, PartialEq)]
pub struct ClientModel {
    /// `rows[a][s]`, sparse.
    rows: [Vec<Vec<(Label, f64)>>; 2],
    /// `reward[a][s]`.
    reward: [Vec<f64>; 2],
}

/// Expected QoE of the next state: `sum_s' P(s'|s,a) * qoe_mid(s')`.
pub fn expected_reward(
    k: &TransitionKernel,
    s: Label,
    a: ClientAction,
    cfg: &DiscretizationConfig,
) -> Result<f64> {
    let row = k.lookup(s, a)?;
    row.iter()
        .map(|&(n, p)| Ok(p * cfg.qoe_midpoint(cfg.decode(n)?.qoe_bin)))
        .sum()
}

impl ClientModel {
    pub fn from_kernel(k: &TransitionKernel, cfg: &DiscretizationConfig) -> Result<Self> {
        if k.num_labels() != cfg.num_labels() {
            return Err(Error::config(
                "kernel",
                format!(
                    "kernel has {} labels but discretization has {}",
                    k.num_labels(),
                    cfg.num_labels()
                ),
            ));
        }
        let n = k.num_labels();
        let mut rows: [Vec<Vec<(Label, f64)>>; 2] = [Vec::with_capacity(n), Vec::with_capacity(n)];
        let mut reward: [Vec<f64>; 2] = [Vec::with_capacity(n), Vec::with_capacity(n)];
        for a in ClientAction::ALL {
            for s in 0..n {
                rows[a.index()].push(k.row(s, a).to_vec());
                reward[a.index()].push(expected_reward(k, s, a, cfg)?);
            }
        }
        Ok(ClientModel { rows, reward })
    }

    /// Model with arbitrary rewards; used for hand-built instances.
    pub fn from_parts(
        win_rows: Vec<Vec<(Label, f64)>>,
        lose_rows: Vec<Vec<(Label, f64)>>,
        win_reward: Vec<f64>,
        lose_reward: Vec<f64>,
    ) -> Result<Self> {
        let n = win_rows.len();
        if lose_rows.len() != n || win_reward.len() != n || lose_reward.len() != n {
            return Err(Error::config("model", "inconsistent state counts"));
        }
        for row in win_rows.iter().chain(&lose_rows) {
            let total: f64 = row.iter().map(|r| r.1).sum();
            if (total - 1.0).abs() > 1e-9 || row.iter().any(|r| r.0 >= n || r.1 < 0.0) {
                return Err(Error::config("model", "row is not a distribution over states"));
            }
        }
        Ok(ClientModel {
            rows: [win_rows, lose_rows],
            reward: [win_reward, lose_reward],
        })
    }

    pub fn num_states(&self) -> usize {
        self.reward[0].len()
    }

    pub fn row(&self, s: Label, a: ClientAction) -> &[(Label, f64)] {
        &self.rows[a.index()][s]
    }

    pub fn reward(&self, s: Label, a: ClientAction) -> f64 {
        self.reward[a.index()][s]
    }

    /// Apply `r -> scale * r + shift` to every reward.
    pub fn with_affine_rewards(&self, scale: f64, shift: f64) -> Self {
        let map = |v: &Vec<f64>| v.iter().map(|r| scale * r + shift).collect();
        ClientModel {
            rows: self.rows.clone(),
            reward: [map(&self.reward[0]), map(&self.reward[1])],
        }
    }

    /// `R(s,a) + gamma * E[v(s') | s, a]`.
    pub fn q_value(&self, s: Label, a: ClientAction, v: &[f64], gamma: f64) -> f64 {
        let future: f64 = self.row(s, a).iter().map(|&(n, p)| p * v[n]).sum();
        self.reward(s, a) + gamma * future
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    pub values: Vec<f64>,
    pub gamma: f64,
    pub converged: bool,
    pub sweeps: usize,
    /// Sup-norm change of every sweep.
    pub deltas: Vec<f64>,
}

impl ValueFunction {
    pub fn new(values: Vec<f64>, gamma: f64) -> Self {
        ValueFunction {
            values,
            gamma,
            converged: true,
            sweeps: 0,
            deltas: Vec::new(),
        }
    }

    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                sweeps: self.sweeps,
                delta: self.deltas.last().copied().unwrap_or(f64::NAN),
            })
        }
    }
}

/// Bid chosen in each client state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidPolicy {
    pub bids: Vec<f64>,
}

impl BidPolicy {
    pub fn bid(&self, s: Label) -> Option<f64> {
        self.bids.get(s).copied()
    }
}

/// Best bid index and its value for one state, lowest bid on ties.
fn best_bid(q_win: f64, q_lose: f64, market: &MarketCurves) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..market.len() {
        let p = market.p_win[i];
        let v = p * (q_win - market.pay[i]) + (1.0 - p) * q_lose;
        if v > best.1 + 1e-12 {
            best = (i, v);
        }
    }
    best
}

/// Solve the single-client bidding MDP: in each state pick the bid that
/// maximises `p_win(b) [R_win - pay(b) + gamma E_win v] + (1 - p_win(b)) [R_lose + gamma E_lose v]`.
pub fn value_iteration_client(
    model: &ClientModel,
    market: &MarketCurves,
    settings: &ViSettings,
) -> (ValueFunction, BidPolicy) {
    assert!(!market.is_empty(), "market needs at least one bid");
    let n = model.num_states();
    let gamma = settings.gamma;
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut deltas = Vec::new();
    let mut converged = false;

    for _ in 0..settings.max_sweeps {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            let qw = model.q_value(s, ClientAction::Win, &v, gamma);
            let ql = model.q_value(s, ClientAction::Lose, &v, gamma);
            next[s] = best_bid(qw, ql, market).1;
            delta = delta.max((next[s] - v[s]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        deltas.push(delta);
        if delta <= settings.tol {
            converged = true;
            break;
        }
    }

    let bids = (0..n)
        .map(|s| {
            let qw = model.q_value(s, ClientAction::Win, &v, gamma);
            let ql = model.q_value(s, ClientAction::Lose, &v, gamma);
            market.bids[best_bid(qw, ql, market).0]
        })
        .collect();
    let vf = ValueFunction {
        values: v,
        gamma,
        converged,
        sweeps: deltas.len(),
        deltas,
    };
    (vf, BidPolicy { bids })
}

/// What winning is worth in each state under `v`:
/// `Q(s, win) - Q(s, lose)`.
pub fn win_advantage(model: &ClientModel, v: &ValueFunction) -> ValueFunction {
    let values = (0..model.num_states())
        .map(|s| {
            model.q_value(s, ClientAction::Win, &v.values, v.gamma)
                - model.q_value(s, ClientAction::Lose, &v.values, v.gamma)
        })
        .collect();
    ValueFunction {
        values,
        gamma: v.gamma,
        converged: v.converged,
        sweeps: v.sweeps,
        deltas: Vec::new(),
    }
}
