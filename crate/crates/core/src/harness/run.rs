//! Seeded evaluation runs over a scenario sequence.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, PolicyName};
use super::metrics::{AssignmentRow, AuctionRow, MetricsLog, SecondRow, SwitchRow};
use super::train::{required_keys, PolicyLibrary};
use crate::controller::{composite_select, Controller, PolicyKind};
use crate::error::{Error, Result};
use crate::model::{BinLabel, ClientAction};
use crate::netsim::QueueKind;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub policy: PolicyName,
    pub seed: u64,
    pub log: MetricsLog,
}

/// One policy, one seed, the whole scenario sequence. All randomness comes
/// from a single generator seeded with `seed`.
pub fn run_single(
    cfg: &ExperimentConfig,
    library: &PolicyLibrary,
    policy: PolicyName,
    seed: u64,
) -> Result<MetricsLog> {
    let setup = cfg.sim_setup();
    let keys = required_keys(cfg);
    let tables = library.policies(policy, &keys);
    if tables.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ap = setup.access_point();
    let mut controller = Controller::new(cfg.admission_limit, cfg.discretization.clone());
    let mut log = MetricsLog::default();
    let mut round = 0u64;

    for (segment, sc) in cfg.scenarios.iter().enumerate() {
        ap.set_membership(&sc.membership());
        let mut active: BTreeMap<BinLabel, &PolicyKind> = BTreeMap::new();
        for bin in BinLabel::ALL {
            let key = sc.key(bin);
            if key.clients == 0 {
                continue;
            }
            let (kind, fallback) = composite_select(key, &tables)?;
            active.insert(bin, kind);
            log.switches.push(SwitchRow {
                segment,
                time: ap.time,
                bin,
                clients: key.clients,
                table_clients: fallback.map_or(key.clients, |k| k.clients),
                fallback: fallback.is_some(),
            });
        }

        for _ in 0..cfg.periods_in(sc) {
            let views = controller.views(&ap);
            let decision = controller.decide(|b| active[&b], &views, round, &mut rng);
            log.coverage_misses += decision.coverage_misses;
            for a in &decision.auctions {
                let bin_clients = views.iter().filter(|v| v.bin == a.bin).count();
                for &(client, bid) in &a.bids {
                    log.auctions.push(AuctionRow {
                        round,
                        time: ap.time,
                        bin: a.bin,
                        bin_clients,
                        client,
                        bid,
                        won: a.winners.contains(&client),
                        price: a.price,
                    });
                }
            }
            for e in &decision.assignment.entries {
                let queue = if decision.assignment.shared_queue {
                    QueueKind::Shared
                } else if e.action == ClientAction::Win {
                    QueueKind::High
                } else {
                    QueueKind::Low
                };
                let bid = decision.bid_of(e.client);
                log.assignments.push(AssignmentRow {
                    round,
                    client_id: e.client,
                    bin: e.bin,
                    queue,
                    bid,
                    price: bid.and_then(|_| decision.price_in(e.bin)),
                });
            }
            setup.run_period(&mut ap, &decision.assignment, &mut rng, |recs| {
                log.seconds.extend(recs.iter().map(|r| SecondRow {
                    time: r.time,
                    client: r.client,
                    bin: r.bin,
                    queue: r.queue,
                    buffer: r.buffer,
                    qoe: r.qoe,
                    stalled: r.stalled,
                    stall_duration: r.stall_duration,
                    goodput: r.goodput,
                }));
            });
            round += 1;
        }
    }
    Ok(log)
}

/// Every (policy, seed) pair of the config, in parallel. Output is ordered
/// by policy (config order) then seed, independent of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig, library: &PolicyLibrary) -> Result<Vec<RunOutput>> {
    cfg.validate()?;
    let jobs: Vec<(PolicyName, u64)> = cfg
        .policies
        .iter()
        .flat_map(|&p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    jobs.par_iter()
        .map(|&(policy, seed)| {
            run_single(cfg, library, policy, seed).map(|log| RunOutput { policy, seed, log })
        })
        .collect()
}

/// Write every run's tables under the config's output directory.
pub fn write_runs(cfg: &ExperimentConfig, runs: &[RunOutput]) -> Result<()> {
    let dir = cfg.out_dir.join("runs");
    for r in runs {
        r.log.write(&dir, r.policy, &cfg.name, r.seed)?;
    }
    Ok(())
}

/// Read back the runs written by [`write_runs`].
pub fn read_runs(cfg: &ExperimentConfig) -> Result<Vec<RunOutput>> {
    let dir = cfg.out_dir.join("runs");
    let mut out = Vec::new();
    for &policy in &cfg.policies {
        for &seed in &cfg.seeds {
            out.push(RunOutput {
                policy,
                seed,
                log: MetricsLog::read(&dir, policy, &cfg.name, seed)?,
            });
        }
    }
    Ok(out)
}
