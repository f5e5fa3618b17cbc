// Solve the single-client bidding MDP against the market a mean-field
// belief implies, and show how the chosen bid tracks the value of winning.
//
// cargo run --example client_bidding

use edgesched::harness::{train::train_bin, ExperimentConfig};
use edgesched::kernel::BinScenario;
use edgesched::model::BinLabel;
use edgesched::planner::{BidPolicy, ValueFunction};

pub fn run_example() -> edgesched::Result<(ValueFunction, BidPolicy)> {
    let mut cfg = ExperimentConfig::default();
    cfg.training.periods = 1200;
    cfg.training.mean_field_periods = 240;
    let key = BinScenario { bin: BinLabel::Good, clients: 6 };
    let (bin, _) = train_bin(&cfg, key)?;
    println!(
        "value iteration: {} sweeps, mean-field belief shifts {:?}",
        bin.values.sweeps,
        bin.belief_shifts.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>()
    );

    let mut visited: Vec<usize> = (0..bin.kernel.num_labels())
        .filter(|&s| bin.kernel.visit_count(s, edgesched::model::ClientAction::Lose) > 20)
        .collect();
    visited.sort_by(|&a, &b| bin.advantage.values[b].total_cmp(&bin.advantage.values[a]));
    println!("{:>5} {:>28} {:>9} {:>5}", "state", "(buffer, qoe, stall) bins", "Qw - Ql", "bid");
    for s in visited.into_iter().take(12) {
        let d = cfg.discretization.decode(s)?;
        println!(
            "{s:>5} {:>28} {:>9.3} {:>5.2}",
            format!("({}, {}, {})", d.buffer_bin, d.qoe_bin, d.stall_bin),
            bin.advantage.values[s],
            bin.tables.bids.bids[s]
        );
    }
    Ok((bin.values, bin.tables.bids))
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
