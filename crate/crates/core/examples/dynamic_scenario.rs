// Clients move from the good bin to the bad bin every few minutes; the
// controller swaps in the tables trained for each bin's current load.
//
// cargo run --example dynamic_scenario

use edgesched::controller::Scenario;
use edgesched::harness::{required_keys, run_single, train_library, ExperimentConfig, MetricsLog, PolicyName};

pub fn run_example() -> edgesched::Result<MetricsLog> {
    let mut cfg = ExperimentConfig {
        scenarios: (0..3)
            .map(|i| Scenario { good_clients: 5 - i, bad_clients: 2 + i, segment_duration: 120.0 })
            .collect(),
        ..Default::default()
    };
    cfg.training.periods = 600;
    cfg.training.mean_field_rounds = 4;
    cfg.training.mean_field_periods = 120;
    cfg.planner.popular_states = 100;
    cfg.planner.samples = 200;

    let library = train_library(&cfg, &required_keys(&cfg))?;
    let log = run_single(&cfg, &library, PolicyName::Auction, 3)?;
    for s in &log.switches {
        println!(
            "segment {} t={:>4}s {:?} bin: {} clients, table for {}",
            s.segment, s.time, s.bin, s.clients, s.table_clients
        );
    }
    let summary = log.summary(PolicyName::Auction, "demo", 3);
    println!(
        "mean QoE {:.3}, mean bid {:.3}, {} auction rows",
        summary.mean_qoe,
        summary.mean_bid,
        log.auctions.len()
    );
    Ok(log)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
