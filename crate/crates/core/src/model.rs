//! Domain types shared across the crate and the per-client state encoding.
//!
//! A client's continuous state (buffer seconds, stall count, QoE) is binned
//! along three axes and flattened to a single integer label:
//!
//! ```text
//! label = buffer_bin * NSB * NQB + qoe_bin * NSB + stall_bin
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ClientId = usize;

/// Flattened discrete client state.
pub type Label = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientState {
    /// Seconds of video buffered.
    pub buffer: f64,
    /// Stall events so far in the session.
    pub stalls: u32,
    /// Current QoE score in `[1, 5]`.
    pub qoe: f64,
}

impl ClientState {
    pub fn fresh() -> Self {
        ClientState {
            buffer: 0.0,
            stalls: 0,
            qoe: crate::dqs::QOE_MAX,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.buffer >= 0.0 && (1.0..=5.0).contains(&self.qoe)
    }
}

/// Joint state of the active clients, in client order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub clients: Vec<ClientState>,
}

impl SystemState {
    pub fn labels(&self, cfg: &DiscretizationConfig) -> Vec<Label> {
        self.clients.iter().map(|c| cfg.discretize(c).label).collect()
    }
}

/// Outcome of a decision period for one client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClientAction {
    /// Placed in the high-priority queue.
    Win,
    Lose,
}

impl ClientAction {
    pub const ALL: [ClientAction; 2] = [ClientAction::Win, ClientAction::Lose];

    pub fn index(self) -> usize {
        match self {
            ClientAction::Win => 0,
            ClientAction::Lose => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClientAction::Win => "win",
            ClientAction::Lose => "lose",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "win" => Some(ClientAction::Win),
            "lose" => Some(ClientAction::Lose),
            _ => None,
        }
    }
}

/// Signal-strength class of a queue bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinLabel {
    Good,
    Bad,
}

impl BinLabel {
    pub const ALL: [BinLabel; 2] = [BinLabel::Good, BinLabel::Bad];

    pub fn as_str(self) -> &'static str {
        match self {
            BinLabel::Good => "good",
            BinLabel::Bad => "bad",
        }
    }
}

impl fmt::Display for BinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentEntry {
    pub client: ClientId,
    pub bin: BinLabel,
    pub action: ClientAction,
}

/// Queue assignment for one decision period.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub entries: Vec<AssignmentEntry>,
    /// All clients of a bin share one queue (no prioritization).
    pub shared_queue: bool,
}

impl Assignment {
    pub fn action_of(&self, client: ClientId) -> Option<ClientAction> {
        self.entries
            .iter()
            .find(|e| e.client == client)
            .map(|e| e.action)
    }

    pub fn winners(&self, bin: BinLabel) -> Vec<ClientId> {
        self.entries
            .iter()
            .filter(|e| e.bin == bin && e.action == ClientAction::Win)
            .map(|e| e.client)
            .collect()
    }

    /// True when no bin has more than `limit` winners.
    pub fn respects_limit(&self, limit: usize) -> bool {
        BinLabel::ALL
            .iter()
            .all(|&b| self.winners(b).len() <= limit)
    }
}

/// Bin layout used to discretize client states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscretizationConfig {
    /// Lower edges of the buffer bins in seconds; the last edge opens an
    /// overflow bin.
    pub buffer_bin_edges: Vec<f64>,
    /// Edges of the QoE bins; `NQB = qoe_bin_edges.len() - 1`.
    pub qoe_bin_edges: Vec<f64>,
    /// NSB. Stall counts at or above `stall_bins - 1` share the top bin.
    pub stall_bins: usize,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig {
            buffer_bin_edges: (0..=10).map(|i| i as f64 * 10.0).collect(),
            qoe_bin_edges: (0..=8).map(|i| 1.0 + i as f64 * 0.5).collect(),
            stall_bins: 4,
        }
    }
}

/// Binned client state with its flattened label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteState {
    pub buffer_bin: usize,
    pub qoe_bin: usize,
    pub stall_bin: usize,
    pub label: Label,
}

fn strictly_ascending(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite())
}

impl DiscretizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.buffer_bin_edges.is_empty() || !strictly_ascending(&self.buffer_bin_edges) {
            return Err(Error::config(
                "discretization.buffer_bin_edges",
                "must be a non-empty strictly ascending list",
            ));
        }
        if self.buffer_bin_edges[0] != 0.0 {
            return Err(Error::config(
                "discretization.buffer_bin_edges",
                "first edge must be 0",
            ));
        }
        let q = &self.qoe_bin_edges;
        if q.len() < 2 || !strictly_ascending(q) {
            return Err(Error::config(
                "discretization.qoe_bin_edges",
                "need at least two strictly ascending edges",
            ));
        }
        if q[0] < 1.0 || q[q.len() - 1] > 5.0 {
            return Err(Error::config(
                "discretization.qoe_bin_edges",
                "edges must lie in [1, 5]",
            ));
        }
        if self.stall_bins == 0 {
            return Err(Error::config("discretization.stall_bins", "must be > 0"));
        }
        Ok(())
    }

    pub fn buffer_bins(&self) -> usize {
        self.buffer_bin_edges.len()
    }

    pub fn nqb(&self) -> usize {
        self.qoe_bin_edges.len() - 1
    }

    pub fn nsb(&self) -> usize {
        self.stall_bins
    }

    /// Number of distinct labels.
    pub fn num_labels(&self) -> usize {
        self.buffer_bins() * self.nqb() * self.nsb()
    }

    pub fn encode(&self, buffer_bin: usize, qoe_bin: usize, stall_bin: usize) -> Label {
        buffer_bin * self.nsb() * self.nqb() + qoe_bin * self.nsb() + stall_bin
    }

    pub fn discretize(&self, state: &ClientState) -> DiscreteState {
        let buffer_bin = self
            .buffer_bin_edges
            .partition_point(|&e| e <= state.buffer)
            .saturating_sub(1);
        let qoe_bin = self
            .qoe_bin_edges
            .partition_point(|&e| e <= state.qoe)
            .saturating_sub(1)
            .min(self.nqb() - 1);
        let stall_bin = (state.stalls as usize).min(self.nsb() - 1);
        DiscreteState {
            buffer_bin,
            qoe_bin,
            stall_bin,
            label: self.encode(buffer_bin, qoe_bin, stall_bin),
        }
    }

    pub fn decode(&self, label: Label) -> Result<DiscreteState> {
        let size = self.num_labels();
        if label >= size {
            return Err(Error::LabelOutOfRange { label, size });
        }
        let per_buffer = self.nsb() * self.nqb();
        Ok(DiscreteState {
            buffer_bin: label / per_buffer,
            qoe_bin: (label % per_buffer) / self.nsb(),
            stall_bin: label % self.nsb(),
            label,
        })
    }

    fn buffer_bin_bounds(&self, bin: usize) -> (f64, f64) {
        let e = &self.buffer_bin_edges;
        let lo = e[bin];
        let hi = if bin + 1 < e.len() {
            e[bin + 1]
        } else if e.len() >= 2 {
            // overflow bin takes the width of its neighbour
            lo + (e[e.len() - 1] - e[e.len() - 2])
        } else {
            lo + 1.0
        };
        (lo, hi)
    }

    fn qoe_bin_bounds(&self, bin: usize) -> (f64, f64) {
        (self.qoe_bin_edges[bin], self.qoe_bin_edges[bin + 1])
    }

    /// Midpoint of the QoE bin, in QoE points.
    pub fn qoe_midpoint(&self, qoe_bin: usize) -> f64 {
        let (lo, hi) = self.qoe_bin_bounds(qoe_bin);
        0.5 * (lo + hi)
    }

    /// Representative continuous state at the middle of each bin.
    pub fn bin_center(&self, d: &DiscreteState) -> ClientState {
        let (blo, bhi) = self.buffer_bin_bounds(d.buffer_bin);
        ClientState {
            buffer: 0.5 * (blo + bhi),
            stalls: d.stall_bin as u32,
            qoe: self.qoe_midpoint(d.qoe_bin),
        }
    }

    /// Bin midpoints scaled per axis to `[0, 1]`, ordered (buffer, qoe, stall).
    pub fn centroid(&self, d: &DiscreteState) -> [f64; 3] {
        let (_, top) = self.buffer_bin_bounds(self.buffer_bins() - 1);
        let b0 = self.buffer_bin_edges[0];
        let (blo, bhi) = self.buffer_bin_bounds(d.buffer_bin);
        let buffer = (0.5 * (blo + bhi) - b0) / (top - b0);

        let q = &self.qoe_bin_edges;
        let qoe = (self.qoe_midpoint(d.qoe_bin) - q[0]) / (q[q.len() - 1] - q[0]);

        let stall = (d.stall_bin as f64 + 0.5) / self.nsb() as f64;
        [buffer, qoe, stall]
    }

    /// Centroid table indexed by label.
    pub fn centroid_table(&self) -> Vec<[f64; 3]> {
        (0..self.num_labels())
            .map(|l| self.centroid(&self.decode(l).expect("label in range")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_4x8() -> DiscretizationConfig {
        DiscretizationConfig {
            buffer_bin_edges: vec![0.0, 10.0, 20.0, 30.0],
            qoe_bin_edges: (0..=8).map(|i| 1.0 + i as f64 * 0.5).collect(),
            stall_bins: 4,
        }
    }

    #[test]
    fn all_zero_corner() {
        let cfg = DiscretizationConfig::default();
        let d = cfg.discretize(&ClientState {
            buffer: 0.0,
            stalls: 0,
            qoe: 1.0,
        });
        assert_eq!((d.buffer_bin, d.qoe_bin, d.stall_bin, d.label), (0, 0, 0, 0));
    }

    #[test]
    fn encoding_formula() {
        let cfg = cfg_4x8();
        assert_eq!(cfg.encode(2, 3, 1), 77);
        let d = cfg.decode(77).unwrap();
        assert_eq!((d.buffer_bin, d.qoe_bin, d.stall_bin), (2, 3, 1));
        assert_eq!(cfg.decode(0).unwrap().label, 0);
    }

    #[test]
    fn decode_out_of_range() {
        let cfg = cfg_4x8();
        let n = cfg.num_labels();
        assert!(matches!(
            cfg.decode(n),
            Err(Error::LabelOutOfRange { label, size }) if label == n && size == n
        ));
    }

    #[test]
    fn stall_clamp_exhaustive() {
        let cfg = cfg_4x8();
        let mut prev = 0;
        for stalls in 0..=20u32 {
            let d = cfg.discretize(&ClientState {
                buffer: 5.0,
                stalls,
                qoe: 3.0,
            });
            let expect = (stalls as usize).min(3);
            assert_eq!(d.stall_bin, expect);
            assert!(d.stall_bin >= prev);
            prev = d.stall_bin;
        }
    }

    #[test]
    fn default_grid_size() {
        let cfg = DiscretizationConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.buffer_bins(), 11);
        assert_eq!(cfg.nqb(), 8);
        assert_eq!(cfg.num_labels(), 352);
    }

    #[test]
    fn overflow_and_top_qoe() {
        let cfg = DiscretizationConfig::default();
        let d = cfg.discretize(&ClientState {
            buffer: 120.0,
            stalls: 1,
            qoe: 5.0,
        });
        assert_eq!(d.buffer_bin, 10);
        assert_eq!(d.qoe_bin, 7);
    }

    #[test]
    fn centroid_axis_step() {
        let cfg = cfg_4x8();
        let a = cfg.centroid(&cfg.decode(cfg.encode(1, 2, 0)).unwrap());
        let b = cfg.centroid(&cfg.decode(cfg.encode(1, 3, 0)).unwrap());
        let dist = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((dist - 1.0 / 8.0).abs() < 1e-12);
        let origin = cfg.centroid(&cfg.decode(0).unwrap());
        assert!(origin.iter().all(|&x| x > 0.0 && x < 0.5));
    }

    #[test]
    fn nearest_neighbour_brute_force() {
        let cfg = cfg_4x8();
        let set = [cfg.encode(0, 0, 0), cfg.encode(2, 5, 1), cfg.encode(3, 7, 3)];
        let query = cfg.encode(2, 6, 2);
        let c = |l| cfg.centroid(&cfg.decode(l).unwrap());
        let dist = |a: [f64; 3], b: [f64; 3]| {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
        };
        let nearest = *set
            .iter()
            .min_by(|&&a, &&b| dist(c(a), c(query)).total_cmp(&dist(c(b), c(query))))
            .unwrap();
        // by hand: differs from (2,5,1) by one qoe and one stall step
        assert_eq!(nearest, set[1]);
    }

    #[test]
    fn rejects_bad_edges() {
        let cfg = DiscretizationConfig { qoe_bin_edges: vec![1.0, 3.0, 2.0], ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = DiscretizationConfig { stall_bins: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn assignment_limit() {
        let a = Assignment {
            entries: (0..4)
                .map(|c| AssignmentEntry {
                    client: c,
                    bin: BinLabel::Good,
                    action: if c < 3 {
                        ClientAction::Win
                    } else {
                        ClientAction::Lose
                    },
                })
                .collect(),
            shared_queue: false,
        };
        assert!(!a.respects_limit(2));
        assert!(a.respects_limit(3));
        assert_eq!(a.action_of(3), Some(ClientAction::Lose));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn discretize_is_idempotent_on_centers(
                buffer in 0.0f64..200.0, stalls in 0u32..30, qoe in 1.0f64..=5.0
            ) {
                let cfg = DiscretizationConfig::default();
                let d = cfg.discretize(&ClientState { buffer, stalls, qoe });
                let again = cfg.discretize(&cfg.bin_center(&d));
                prop_assert_eq!(d, again);
            }

            #[test]
            fn stall_bin_monotone(a in 0u32..50, b in 0u32..50) {
                let cfg = DiscretizationConfig::default();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let s = |stalls| cfg.discretize(&ClientState { buffer: 3.0, stalls, qoe: 4.0 }).stall_bin;
                prop_assert!(s(lo) <= s(hi));
            }
        }
    }
}
