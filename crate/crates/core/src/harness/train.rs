//! Offline training of the learned policies for every bin load an
//! experiment visits, with a file cache under `<out>/artifacts`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PolicyName};
use crate::controller::{AuctionTables, Controller, PolicyKind, SimSetup};
use crate::error::{Error, Result};
use crate::kernel::{collect_traces, fit_kernel, save_traces, BinScenario, TransitionKernel, TransitionRecord};
use crate::market::{update_belief, BidDistribution, BidSet, MarketCurves};
use crate::model::{BinLabel, ClientId, Label};
use crate::planner::{
    canonical, feasible_actions, index_of, select_popular_states, value_iteration_client,
    value_iteration_system, win_advantage, BidPolicy, ClientModel, IndexMap, PopularStateSet,
    SystemPolicy, ValueFunction,
};

/// Everything learned for one (bin, client count).
#[derive(Debug, Clone)]
pub struct TrainedBin {
    pub key: BinScenario,
    pub kernel: TransitionKernel,
    pub values: ValueFunction,
    /// `Q(s, win) - Q(s, lose)`: what a client in `s` would pay to win.
    pub advantage: ValueFunction,
    pub tables: AuctionTables,
    pub curves: MarketCurves,
    pub index: IndexMap,
    pub system: SystemPolicy,
    /// Total-variation change of the belief in each mean-field round.
    pub belief_shifts: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct PolicyLibrary {
    pub bins: BTreeMap<BinScenario, TrainedBin>,
}

impl PolicyLibrary {
    pub fn get(&self, key: BinScenario) -> Option<&TrainedBin> {
        self.bins.get(&key)
    }

    /// Per-load tables of one policy, ready for the composite controller.
    /// Baselines map every `keys` entry to the same policy.
    pub fn policies(
        &self,
        name: PolicyName,
        keys: &[BinScenario],
    ) -> BTreeMap<BinScenario, PolicyKind> {
        let fixed = |kind: PolicyKind| keys.iter().map(|&k| (k, kind.clone())).collect();
        match name {
            PolicyName::Vanilla => fixed(PolicyKind::Vanilla),
            PolicyName::RoundRobin => fixed(PolicyKind::RoundRobin),
            PolicyName::GreedyBuffer => fixed(PolicyKind::GreedyBuffer),
            PolicyName::Random => fixed(PolicyKind::Random),
            PolicyName::SystemWide => self.map(|b| PolicyKind::SystemWide(Arc::new(b.system.clone()))),
            PolicyName::Auction => self.map(|b| PolicyKind::AuctionBased(Arc::new(b.tables.clone()))),
            PolicyName::Index => self.map(|b| PolicyKind::Index(Arc::new(b.index.clone()))),
        }
    }

    fn map(&self, f: impl Fn(&TrainedBin) -> PolicyKind) -> BTreeMap<BinScenario, PolicyKind> {
        self.bins.iter().map(|(&k, b)| (k, f(b))).collect()
    }
}

/// Distinct (bin, clients) loads across the scenario sequence.
pub fn required_keys(cfg: &ExperimentConfig) -> Vec<BinScenario> {
    let mut keys: Vec<BinScenario> = cfg
        .scenarios
        .iter()
        .flat_map(|s| {
            BinLabel::ALL
                .into_iter()
                .filter(|&b| s.clients(b) > 0)
                .map(|b| s.key(b))
        })
        .collect();
    keys.sort();
    keys.dedup();
    keys
}

pub fn trace_policy(name: PolicyName) -> Result<PolicyKind> {
    match name {
        PolicyName::Vanilla => Ok(PolicyKind::Vanilla),
        PolicyName::RoundRobin => Ok(PolicyKind::RoundRobin),
        PolicyName::GreedyBuffer => Ok(PolicyKind::GreedyBuffer),
        PolicyName::Random => Ok(PolicyKind::Random),
        other => Err(Error::config(
            "training.policies",
            format!("{other} cannot collect traces"),
        )),
    }
}

fn key_seed(base: u64, key: BinScenario) -> u64 {
    let bin = match key.bin {
        BinLabel::Good => 0,
        BinLabel::Bad => 1,
    };
    base.wrapping_mul(1_000_003)
        .wrapping_add(bin * 1000 + key.clients as u64)
}

/// Joint states (sorted labels) per period, in time order.
pub fn joint_states(records: &[TransitionRecord]) -> Vec<Vec<Label>> {
    let mut by_t: BTreeMap<u64, Vec<Label>> = BTreeMap::new();
    for r in records {
        by_t.entry(r.t).or_default().push(r.s);
    }
    by_t.into_values().map(|s| canonical(&s).0).collect()
}

/// Simulate the auction policy on one bin load and return every bid placed.
fn simulate_bids(
    setup: &SimSetup,
    key: BinScenario,
    tables: AuctionTables,
    periods: u64,
    episode_periods: u64,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ap = setup.access_point();
    let members: Vec<(ClientId, BinLabel)> = (0..key.clients).map(|c| (c, key.bin)).collect();
    ap.set_membership(&members);
    let mut controller = Controller::new(setup.admission_limit, setup.discretization.clone());
    let policy = PolicyKind::AuctionBased(Arc::new(tables));
    let mut bids = Vec::new();
    for t in 0..periods {
        if t % episode_periods.max(1) == 0 {
            ap.reset_sessions();
            controller.reset();
        }
        let decision = controller.decide_uniform(&policy, &ap, t, &mut rng);
        bids.extend(decision.auctions.iter().flat_map(|a| a.bids.iter().map(|b| b.1)));
        setup.run_period(&mut ap, &decision.assignment, &mut rng, |_| {});
    }
    bids
}

/// Fit the kernel and solve every learned policy for one bin load.
pub fn train_bin(cfg: &ExperimentConfig, key: BinScenario) -> Result<(TrainedBin, Vec<TransitionRecord>)> {
    let setup = cfg.sim_setup();
    let disc = &cfg.discretization;
    let seed = key_seed(cfg.training.seed, key);
    let trace_policies = cfg
        .training
        .policies
        .iter()
        .map(|&p| trace_policy(p))
        .collect::<Result<Vec<_>>>()?;
    let records = collect_traces(
        &setup,
        key,
        &trace_policies,
        cfg.training.periods,
        cfg.training.episode_periods,
        seed,
    )?;
    let kernel = fit_kernel(&records, disc.num_labels())?;
    let model = ClientModel::from_kernel(&kernel, disc)?;
    let vi = cfg.planner.vi();
    let n = cfg.admission_limit;

    // mean-field loop: bids are optimal for the belief, and the belief is
    // the law of the bids they produce
    let bid_set: BidSet = cfg.market.bid_set()?;
    let mut belief = BidDistribution::uniform(bid_set.clone());
    let mut belief_shifts = Vec::new();
    for round in 0..cfg.training.mean_field_rounds {
        let curves = MarketCurves::from_belief(&belief, key.clients, n);
        let (v, bids) = value_iteration_client(&model, &curves, &vi);
        v.ensure_converged()?;
        let tables = AuctionTables {
            bids,
            belief: belief.clone(),
            lambda: cfg.market.lambda,
        };
        let placed = simulate_bids(
            &setup,
            key,
            tables,
            cfg.training.mean_field_periods,
            cfg.training.episode_periods,
            seed.wrapping_add(1 + round as u64),
        );
        let next = update_belief(&belief, &placed, cfg.training.mean_field_damping);
        belief_shifts.push(belief.total_variation(&next));
        belief = next;
    }
    let curves = MarketCurves::from_belief(&belief, key.clients, n);
    let (values, bids) = value_iteration_client(&model, &curves, &vi);
    values.ensure_converged()?;
    let advantage = win_advantage(&model, &values);
    let index = index_of(&advantage);

    let popular = select_popular_states(&joint_states(&records), cfg.planner.popular_states)?;
    let system = value_iteration_system(
        &model,
        &popular,
        n,
        &disc.centroid_table(),
        &cfg.planner.system(seed),
    )?;
    system.values.ensure_converged()?;

    let trained = TrainedBin {
        key,
        kernel,
        values,
        advantage,
        tables: AuctionTables {
            bids,
            belief,
            lambda: cfg.market.lambda,
        },
        curves,
        index,
        system,
        belief_shifts,
    };
    Ok((trained, records))
}

/// Train every load in `keys`.
pub fn train_library(cfg: &ExperimentConfig, keys: &[BinScenario]) -> Result<PolicyLibrary> {
    use rayon::prelude::*;
    let trained: Vec<TrainedBin> = keys
        .par_iter()
        .map(|&k| train_bin(cfg, k).map(|t| t.0))
        .collect::<Result<_>>()?;
    Ok(PolicyLibrary {
        bins: trained.into_iter().map(|t| (t.key, t)).collect(),
    })
}

// ---- artifact cache ----

fn key_dir(root: &Path, key: BinScenario) -> PathBuf {
    root.join(format!("{}{}", key.bin.as_str().to_lowercase(), key.clients))
}

/// The config with every field that does not affect training blanked, so
/// equal fingerprints mean the cached tables are still valid.
fn fingerprint(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.name = String::new();
    c.seeds.clear();
    c.policies.clear();
    c.scenarios.clear();
    c.out_dir = PathBuf::new();
    c.to_toml()
}

#[derive(Debug, Serialize, Deserialize)]
struct BinMeta {
    clients: usize,
    gamma: f64,
    client_sweeps: usize,
    system_sweeps: usize,
    belief_shifts: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClientRow {
    label: Label,
    value: f64,
    advantage: f64,
    bid: f64,
    rank: usize,
    p_win: f64,
    pay: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BeliefRow {
    bid: f64,
    prob: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SystemRow {
    state: String,
    winners: String,
    value: f64,
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn split(s: &str) -> std::result::Result<Vec<usize>, std::num::ParseIntError> {
    s.split_whitespace().map(str::parse).collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

/// Write the trained tables of one load under `root`.
pub fn save_bin(root: &Path, bin: &TrainedBin, records: Option<&[TransitionRecord]>) -> Result<()> {
    let dir = key_dir(root, bin.key);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    if let Some(records) = records {
        save_traces(records, &dir.join("traces.csv"))?;
    }
    bin.kernel.save(&dir.join("kernel.csv"))?;
    let nb = bin.curves.bids.len();
    write_rows(
        &dir.join("client.csv"),
        (0..bin.values.values.len()).map(|s| {
            let bid = bin.tables.bids.bids[s];
            let i = bin.curves.bids.iter().position(|&b| b == bid).unwrap_or(nb - 1);
            ClientRow {
                label: s,
                value: bin.values.values[s],
                advantage: bin.advantage.values[s],
                bid,
                rank: bin.index.ranks[s],
                p_win: bin.curves.p_win[i],
                pay: bin.curves.pay[i],
            }
        }),
    )?;
    write_rows(
        &dir.join("belief.csv"),
        bin.tables
            .belief
            .support()
            .values()
            .iter()
            .zip(bin.tables.belief.pmf())
            .map(|(&bid, &prob)| BeliefRow { bid, prob }),
    )?;
    let sys = &bin.system;
    write_rows(
        &dir.join("system.csv"),
        sys.popular.states.iter().enumerate().map(|(i, s)| SystemRow {
            state: join(s),
            winners: join(&sys.actions[sys.choice[i]]),
            value: sys.values.values[i],
        }),
    )?;
    let meta = BinMeta {
        clients: bin.key.clients,
        gamma: bin.values.gamma,
        client_sweeps: bin.values.sweeps,
        system_sweeps: sys.values.sweeps,
        belief_shifts: bin.belief_shifts.clone(),
    };
    let path = dir.join("meta.toml");
    fs::write(&path, toml::to_string(&meta).expect("meta serialises")).map_err(|e| Error::io(&path, e))
}

pub fn load_bin(root: &Path, cfg: &ExperimentConfig, key: BinScenario) -> Result<TrainedBin> {
    let dir = key_dir(root, key);
    let disc = &cfg.discretization;
    let meta_path = dir.join("meta.toml");
    let meta: BinMeta = toml::from_str(
        &fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?,
    )?;
    let bad = |path: &Path, reason: String| Error::Artifact {
        path: path.to_path_buf(),
        reason,
    };
    let kernel = TransitionKernel::load(&dir.join("kernel.csv"), disc.num_labels())?;

    let client_path = dir.join("client.csv");
    let rows: Vec<ClientRow> = read_rows(&client_path)?;
    if rows.len() != disc.num_labels() || rows.iter().enumerate().any(|(i, r)| r.label != i) {
        return Err(bad(&client_path, "labels do not match the discretization".into()));
    }
    let vf = |values: Vec<f64>, sweeps| ValueFunction {
        values,
        gamma: meta.gamma,
        converged: true,
        sweeps,
        deltas: Vec::new(),
    };
    let values = vf(rows.iter().map(|r| r.value).collect(), meta.client_sweeps);
    let advantage = vf(rows.iter().map(|r| r.advantage).collect(), meta.client_sweeps);
    let bids = BidPolicy {
        bids: rows.iter().map(|r| r.bid).collect(),
    };
    let index = IndexMap {
        ranks: rows.iter().map(|r| r.rank).collect(),
    };

    let belief_path = dir.join("belief.csv");
    let brows: Vec<BeliefRow> = read_rows(&belief_path)?;
    let support = BidSet::new(brows.iter().map(|r| r.bid).collect())?;
    let belief = BidDistribution::new(support, brows.iter().map(|r| r.prob).collect())?;
    let curves = MarketCurves::from_belief(&belief, key.clients, cfg.admission_limit);

    let sys_path = dir.join("system.csv");
    let srows: Vec<SystemRow> = read_rows(&sys_path)?;
    let actions = feasible_actions(key.clients, cfg.admission_limit);
    let mut states = Vec::with_capacity(srows.len());
    let mut choice = Vec::with_capacity(srows.len());
    for r in &srows {
        let state = split(&r.state).map_err(|e| bad(&sys_path, e.to_string()))?;
        let winners = split(&r.winners).map_err(|e| bad(&sys_path, e.to_string()))?;
        if state.len() != key.clients || state.iter().any(|&s| s >= disc.num_labels()) {
            return Err(bad(&sys_path, format!("bad joint state {:?}", r.state)));
        }
        let a = actions
            .iter()
            .position(|x| *x == winners)
            .ok_or_else(|| bad(&sys_path, format!("infeasible action {:?}", r.winners)))?;
        states.push(state);
        choice.push(a);
    }
    let system = SystemPolicy {
        popular: PopularStateSet { states },
        actions,
        choice,
        values: vf(srows.iter().map(|r| r.value).collect(), meta.system_sweeps),
    };

    Ok(TrainedBin {
        key,
        kernel,
        values,
        advantage,
        tables: AuctionTables {
            bids,
            belief,
            lambda: cfg.market.lambda,
        },
        curves,
        index,
        system,
        belief_shifts: meta.belief_shifts,
    })
}

/// Load cached tables when the training settings match, otherwise train and
/// write them. Returns the library and whether the cache was used.
pub fn train_or_load(cfg: &ExperimentConfig, keys: &[BinScenario]) -> Result<(PolicyLibrary, bool)> {
    let root = cfg.out_dir.join("artifacts");
    let stamp = root.join("training.toml");
    let fp = fingerprint(cfg);
    if fs::read_to_string(&stamp).ok().as_deref() == Some(fp.as_str()) {
        let loaded: Result<Vec<TrainedBin>> = keys.iter().map(|&k| load_bin(&root, cfg, k)).collect();
        if let Ok(bins) = loaded {
            let bins = bins.into_iter().map(|b| (b.key, b)).collect();
            return Ok((PolicyLibrary { bins }, true));
        }
    }
    use rayon::prelude::*;
    let trained: Vec<(TrainedBin, Vec<TransitionRecord>)> =
        keys.par_iter().map(|&k| train_bin(cfg, k)).collect::<Result<_>>()?;
    fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    for (bin, records) in &trained {
        save_bin(&root, bin, Some(records))?;
    }
    fs::write(&stamp, fp).map_err(|e| Error::io(&stamp, e))?;
    let bins = trained.into_iter().map(|(b, _)| (b.key, b)).collect();
    Ok((PolicyLibrary { bins }, false))
}
