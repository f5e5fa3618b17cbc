use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::{Scenario, SimSetup};
use crate::dqs::DqsParams;
use crate::error::{Error, Result};
use crate::market::BidSet;
use crate::model::{BinLabel, DiscretizationConfig};
use crate::netsim::{BinSpec, ChannelDerating, PlaybackParams};
use crate::planner::{SystemSettings, ViSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    Vanilla,
    RoundRobin,
    GreedyBuffer,
    Random,
    SystemWide,
    Auction,
    Index,
}

impl PolicyName {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyName::Vanilla => "vanilla",
            PolicyName::RoundRobin => "round_robin",
            PolicyName::GreedyBuffer => "greedy_buffer",
            PolicyName::Random => "random",
            PolicyName::SystemWide => "system_wide",
            PolicyName::Auction => "auction",
            PolicyName::Index => "index",
        }
    }

    /// Needs trained tables.
    pub fn is_learned(self) -> bool {
        matches!(
            self,
            PolicyName::SystemWide | PolicyName::Auction | PolicyName::Index
        )
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarketConfig {
    pub bid_min: f64,
    pub bid_max: f64,
    pub bid_count: usize,
    pub lambda: f64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig {
            bid_min: 0.0,
            bid_max: 5.0,
            bid_count: 21,
            lambda: 0.1,
        }
    }
}

impl MarketConfig {
    pub fn bid_set(&self) -> Result<BidSet> {
        BidSet::new(BidSet::uniform(self.bid_min, self.bid_max, self.bid_count).values().to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub gamma: f64,
    pub tol: f64,
    pub max_sweeps: usize,
    /// K, the number of popular joint states.
    pub popular_states: usize,
    /// Product-kernel samples per (popular state, action).
    pub samples: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            gamma: 0.9,
            tol: 1e-6,
            max_sweeps: 10_000,
            popular_states: 500,
            samples: 1000,
        }
    }
}

impl PlannerConfig {
    pub fn vi(&self) -> ViSettings {
        ViSettings {
            gamma: self.gamma,
            tol: self.tol,
            max_sweeps: self.max_sweeps,
        }
    }

    pub fn system(&self, seed: u64) -> SystemSettings {
        SystemSettings {
            vi: self.vi(),
            samples: self.samples,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    /// Decision periods of trace collection per bin load.
    pub periods: u64,
    /// Sessions restart every this many periods during trace collection.
    pub episode_periods: u64,
    pub policies: Vec<PolicyName>,
    pub seed: u64,
    /// Rounds of (solve bids -> simulate auctions -> refit belief).
    pub mean_field_rounds: usize,
    pub mean_field_periods: u64,
    /// Weight of the newly observed bid law in each mean-field round; the
    /// undamped iteration oscillates between low and high bids.
    pub mean_field_damping: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            // ten simulated hours at 10 s per decision
            periods: 3600,
            episode_periods: 180,
            policies: vec![
                PolicyName::RoundRobin,
                PolicyName::GreedyBuffer,
                PolicyName::Random,
            ],
            seed: 0x5EED,
            mean_field_rounds: 10,
            mean_field_periods: 720,
            mean_field_damping: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Used as the scenario part of output file names.
    pub name: String,
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicyName>,
    pub scenarios: Vec<Scenario>,
    /// N.
    pub admission_limit: usize,
    pub decision_period: f64,
    pub tick: f64,
    pub out_dir: PathBuf,
    pub discretization: DiscretizationConfig,
    pub dqs: DqsParams,
    pub playback: PlaybackParams,
    /// Base bin; the bad bin is derived from it through `channel`.
    pub bin: BinSpec,
    pub channel: ChannelDerating,
    pub market: MarketConfig,
    pub planner: PlannerConfig,
    pub training: TrainingConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let seg = 1800.0;
        let scenarios = (0..4)
            .map(|i| Scenario {
                good_clients: 6 - i,
                bad_clients: 3 + i,
                segment_duration: seg,
            })
            .collect();
        ExperimentConfig {
            name: "dynamic".into(),
            seeds: (0..20).collect(),
            policies: vec![
                PolicyName::Vanilla,
                PolicyName::RoundRobin,
                PolicyName::SystemWide,
                PolicyName::Auction,
                PolicyName::Index,
            ],
            scenarios,
            admission_limit: 2,
            decision_period: 10.0,
            tick: 1.0,
            out_dir: PathBuf::from("out"),
            discretization: DiscretizationConfig::default(),
            dqs: DqsParams::default(),
            playback: PlaybackParams::default(),
            bin: BinSpec::default(),
            channel: ChannelDerating::default(),
            market: MarketConfig::default(),
            planner: PlannerConfig::default(),
            training: TrainingConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Single static segment: `clients` in the good bin for `seconds`.
    pub fn static_good(clients: usize, seconds: f64) -> Self {
        ExperimentConfig {
            name: format!("static_good{clients}"),
            scenarios: vec![Scenario {
                good_clients: clients,
                bad_clients: 0,
                segment_duration: seconds,
            }],
            ..ExperimentConfig::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::parse(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "need at least one seed"));
        }
        if self.policies.is_empty() {
            return Err(Error::config("policies", "need at least one policy"));
        }
        if self.scenarios.is_empty() {
            return Err(Error::config("scenarios", "need at least one scenario"));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::config(
                "name",
                "must be non-empty without path separators",
            ));
        }
        if self.admission_limit == 0 {
            return Err(Error::config("admission_limit", "must be >= 1"));
        }
        if !(self.tick > 0.0) || !(self.decision_period >= self.tick) {
            return Err(Error::config("decision_period", "must be >= tick > 0"));
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            if s.segment_duration < self.decision_period {
                return Err(Error::config(
                    format!("scenarios[{i}].segment_duration"),
                    "must be >= decision_period",
                ));
            }
        }
        self.discretization.validate()?;
        self.dqs.validate()?;
        self.playback.validate()?;
        self.bin.validate()?;
        self.channel.validate()?;
        self.market.bid_set()?;
        if !(self.market.lambda > 0.0 && self.market.lambda <= 1.0) {
            return Err(Error::config("market.lambda", "must be in (0, 1]"));
        }
        self.planner.vi().validate()?;
        if self.planner.popular_states == 0 {
            return Err(Error::config("planner.popular_states", "must be >= 1"));
        }
        if self.planner.samples == 0 {
            return Err(Error::config("planner.samples", "must be >= 1"));
        }
        if self.training.periods == 0 {
            return Err(Error::config("training.periods", "must be > 0"));
        }
        if !(self.training.mean_field_damping > 0.0 && self.training.mean_field_damping <= 1.0) {
            return Err(Error::config("training.mean_field_damping", "must be in (0, 1]"));
        }
        if self.training.policies.is_empty() {
            return Err(Error::config("training.policies", "need at least one policy"));
        }
        if let Some(p) = self.training.policies.iter().find(|p| p.is_learned()) {
            return Err(Error::config(
                "training.policies",
                format!("{p} needs trained tables and cannot collect traces"),
            ));
        }
        Ok(())
    }

    pub fn sim_setup(&self) -> SimSetup {
        let good = BinSpec {
            label: BinLabel::Good,
            ..self.bin
        };
        SimSetup {
            good,
            bad: self.channel.apply(BinLabel::Bad, &good),
            playback: self.playback.clone(),
            dqs: self.dqs.clone(),
            discretization: self.discretization.clone(),
            admission_limit: self.admission_limit,
            decision_period: self.decision_period,
            tick: self.tick,
        }
    }

    pub fn periods_in(&self, s: &Scenario) -> u64 {
        (s.segment_duration / self.decision_period).round() as u64
    }
}
