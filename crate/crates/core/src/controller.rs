//! Per-decision-period scheduling: turn the current client states into a
//! queue assignment under one of the policies, and pick the precomputed
//! policy that matches the current load of each bin.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dqs::DqsParams;
use crate::error::{Error, Result};
use crate::kernel::BinScenario;
use crate::market::{run_auction, update_belief, BidDistribution};
use crate::model::{
    Assignment, AssignmentEntry, BinLabel, ClientAction, ClientId, DiscretizationConfig, Label,
};
use crate::netsim::{AccessPoint, BinSpec, PlaybackParams, TickRecord};
use crate::planner::{BidPolicy, IndexMap, SystemPolicy};

/// Everything needed to instantiate and step the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSetup {
    pub good: BinSpec,
    /// Already derated for the bad channel.
    pub bad: BinSpec,
    pub playback: PlaybackParams,
    pub dqs: DqsParams,
    pub discretization: DiscretizationConfig,
    /// N: high-priority admissions per bin.
    pub admission_limit: usize,
    /// Seconds between decisions.
    pub decision_period: f64,
    /// Simulation step in seconds.
    pub tick: f64,
}

impl SimSetup {
    pub fn access_point(&self) -> AccessPoint {
        AccessPoint::new(self.good, self.bad, self.playback.clone(), self.dqs.clone())
    }

    pub fn ticks_per_period(&self) -> usize {
        (self.decision_period / self.tick).round().max(1.0) as usize
    }

    /// Apply `assignment` and simulate one decision period.
    pub fn run_period(
        &self,
        ap: &mut AccessPoint,
        assignment: &Assignment,
        rng: &mut ChaCha8Rng,
        mut on_tick: impl FnMut(&[TickRecord]),
    ) {
        ap.apply_assignment(assignment);
        for _ in 0..self.ticks_per_period() {
            let recs = ap.tick(self.tick, rng);
            on_tick(&recs);
        }
    }
}

/// Bids and trained belief for the auction policy of one bin load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionTables {
    pub bids: BidPolicy,
    pub belief: BidDistribution,
    /// Weight of the newest round in the belief's moving average.
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub enum PolicyKind {
    /// One shared queue per bin with the bandwidth of both priority queues.
    Vanilla,
    RoundRobin,
    /// Lowest buffers win; used to explore while collecting traces.
    GreedyBuffer,
    /// Uniformly random winners; used to explore while collecting traces.
    Random,
    SystemWide(Arc<SystemPolicy>),
    AuctionBased(Arc<AuctionTables>),
    Index(Arc<IndexMap>),
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Vanilla => "vanilla",
            PolicyKind::RoundRobin => "round_robin",
            PolicyKind::GreedyBuffer => "greedy_buffer",
            PolicyKind::Random => "random",
            PolicyKind::SystemWide(_) => "system_wide",
            PolicyKind::AuctionBased(_) => "auction",
            PolicyKind::Index(_) => "index",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Client counts per bin for one segment of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub good_clients: usize,
    pub bad_clients: usize,
    /// Seconds.
    pub segment_duration: f64,
}

impl Scenario {
    pub fn clients(&self, bin: BinLabel) -> usize {
        match bin {
            BinLabel::Good => self.good_clients,
            BinLabel::Bad => self.bad_clients,
        }
    }

    pub fn key(&self, bin: BinLabel) -> BinScenario {
        BinScenario {
            bin,
            clients: self.clients(bin),
        }
    }

    /// `good{n}_bad{m}`, used in file names.
    pub fn tag(&self) -> String {
        format!("good{}_bad{}", self.good_clients, self.bad_clients)
    }

    /// Client ids per bin: Good takes the lowest ids.
    pub fn membership(&self) -> Vec<(ClientId, BinLabel)> {
        (0..self.good_clients)
            .map(|c| (c, BinLabel::Good))
            .chain((0..self.bad_clients).map(|c| (self.good_clients + c, BinLabel::Bad)))
            .collect()
    }
}

/// Pick the policy for a bin load: exact key, else the nearest client count
/// on the same channel (ties go to the larger count). `None` in the second
/// slot means the key matched exactly.
pub fn composite_select(
    key: BinScenario,
    library: &BTreeMap<BinScenario, PolicyKind>,
) -> Result<(&PolicyKind, Option<BinScenario>)> {
    if library.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    if let Some(p) = library.get(&key) {
        return Ok((p, None));
    }
    let same_channel: Vec<_> = library.iter().filter(|(k, _)| k.bin == key.bin).collect();
    let pool = if same_channel.is_empty() {
        library.iter().collect()
    } else {
        same_channel
    };
    let (k, p) = pool
        .into_iter()
        .min_by(|(a, _), (b, _)| {
            let da = a.clients.abs_diff(key.clients);
            let db = b.clients.abs_diff(key.clients);
            da.cmp(&db).then(b.clients.cmp(&a.clients))
        })
        .expect("library is non-empty");
    Ok((p, Some(*k)))
}

/// One client's inputs to a decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClientView {
    pub id: ClientId,
    pub bin: BinLabel,
    pub label: Label,
    pub buffer: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionRecord {
    pub bin: BinLabel,
    pub bids: Vec<(ClientId, f64)>,
    pub winners: Vec<ClientId>,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Decision {
    pub assignment: Assignment,
    pub auctions: Vec<AuctionRecord>,
    /// Clients whose state had no entry in the active policy table.
    pub coverage_misses: usize,
}

impl Decision {
    pub fn bid_of(&self, client: ClientId) -> Option<f64> {
        self.auctions
            .iter()
            .flat_map(|a| a.bids.iter())
            .find(|(c, _)| *c == client)
            .map(|&(_, b)| b)
    }

    pub fn price_in(&self, bin: BinLabel) -> Option<f64> {
        self.auctions.iter().find(|a| a.bin == bin).map(|a| a.price)
    }
}

#[derive(Debug, Clone, Default)]
struct BinState {
    rr_cursor: usize,
    belief: Option<BidDistribution>,
}

/// Mutable per-run state of the scheduler: round-robin cursors and the
/// auction belief of each bin.
#[derive(Debug, Clone)]
pub struct Controller {
    pub admission_limit: usize,
    pub discretization: DiscretizationConfig,
    bins: BTreeMap<BinLabel, BinState>,
}

impl Controller {
    pub fn new(admission_limit: usize, discretization: DiscretizationConfig) -> Self {
        Controller {
            admission_limit,
            discretization,
            bins: BTreeMap::new(),
        }
    }

    pub fn reset(&mut self) {
        self.bins.clear();
    }

    pub fn belief(&self, bin: BinLabel) -> Option<&BidDistribution> {
        self.bins.get(&bin).and_then(|b| b.belief.as_ref())
    }

    pub fn views(&self, ap: &AccessPoint) -> Vec<ClientView> {
        ap.clients()
            .iter()
            .map(|c| ClientView {
                id: c.id,
                bin: c.bin,
                label: self.discretization.discretize(&c.state).label,
                buffer: c.buffer,
            })
            .collect()
    }

    /// Same policy in every bin.
    pub fn decide_uniform(
        &mut self,
        policy: &PolicyKind,
        ap: &AccessPoint,
        round: u64,
        rng: &mut ChaCha8Rng,
    ) -> Decision {
        let views = self.views(ap);
        self.decide(|_| policy, &views, round, rng)
    }

    /// Build the assignment for this period; `policy_for` gives the policy
    /// of each bin.
    pub fn decide<'p>(
        &mut self,
        policy_for: impl Fn(BinLabel) -> &'p PolicyKind,
        clients: &[ClientView],
        _round: u64,
        rng: &mut ChaCha8Rng,
    ) -> Decision {
        let mut decision = Decision::default();
        for bin in BinLabel::ALL {
            let members: Vec<ClientView> = clients.iter().filter(|c| c.bin == bin).copied().collect();
            if members.is_empty() {
                continue;
            }
            let policy = policy_for(bin);
            if matches!(policy, PolicyKind::Vanilla) {
                decision.assignment.shared_queue = true;
            }
            let winners = self.winners_in_bin(policy, bin, &members, rng, &mut decision);
            for m in &members {
                decision.assignment.entries.push(AssignmentEntry {
                    client: m.id,
                    bin,
                    action: if winners.contains(&m.id) {
                        ClientAction::Win
                    } else {
                        ClientAction::Lose
                    },
                });
            }
        }
        decision.assignment.entries.sort_by_key(|e| e.client);
        decision
    }

    fn winners_in_bin(
        &mut self,
        policy: &PolicyKind,
        bin: BinLabel,
        members: &[ClientView],
        rng: &mut ChaCha8Rng,
        decision: &mut Decision,
    ) -> Vec<ClientId> {
        let limit = self.admission_limit;
        let n = members.len();
        let state = self.bins.entry(bin).or_default();
        match policy {
            PolicyKind::Vanilla => Vec::new(),
            PolicyKind::RoundRobin => {
                if n <= limit {
                    return members.iter().map(|m| m.id).collect();
                }
                let start = state.rr_cursor % n;
                state.rr_cursor = (start + limit) % n;
                (0..limit).map(|i| members[(start + i) % n].id).collect()
            }
            PolicyKind::GreedyBuffer => {
                let mut order: Vec<&ClientView> = members.iter().collect();
                order.sort_by(|a, b| a.buffer.total_cmp(&b.buffer).then(a.id.cmp(&b.id)));
                order.iter().take(limit).map(|m| m.id).collect()
            }
            PolicyKind::Random => members
                .choose_multiple(rng, limit.min(n))
                .map(|m| m.id)
                .collect(),
            PolicyKind::Index(index) => {
                let mut ranked: Vec<(usize, ClientId)> = Vec::with_capacity(n);
                for m in members {
                    match index.rank(m.label) {
                        Some(r) => ranked.push((r, m.id)),
                        None => decision.coverage_misses += 1,
                    }
                }
                ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                ranked.iter().take(limit).map(|&(_, id)| id).collect()
            }
            PolicyKind::AuctionBased(tables) => {
                let mut bids = Vec::with_capacity(n);
                for m in members {
                    match tables.bids.bid(m.label) {
                        Some(b) => bids.push((m.id, b)),
                        None => decision.coverage_misses += 1,
                    }
                }
                let result = run_auction(&bids, limit, rng);
                let observed: Vec<f64> = bids.iter().map(|b| b.1).collect();
                let belief = state.belief.get_or_insert_with(|| tables.belief.clone());
                *belief = update_belief(belief, &observed, tables.lambda);
                decision.auctions.push(AuctionRecord {
                    bin,
                    bids,
                    winners: result.winners.clone(),
                    price: result.price,
                });
                result.winners
            }
            PolicyKind::SystemWide(policy) => {
                if policy.num_clients() != n {
                    decision.coverage_misses += n;
                    return Vec::new();
                }
                let labels: Vec<Label> = members.iter().map(|m| m.label).collect();
                let centroids = self.discretization.centroid_table();
                policy
                    .winners_for(&labels, &centroids)
                    .into_iter()
                    .map(|i| members[i].id)
                    .collect()
            }
        }
    }
}
