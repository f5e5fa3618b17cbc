// Rank client states by what winning is worth and check how stable the
// ranking of the top states is between a 6-client and a 3-client market.
//
// cargo run --example index_consistency

use edgesched::harness::{train::train_bin, ExperimentConfig};
use edgesched::kernel::BinScenario;
use edgesched::model::BinLabel;
use edgesched::planner::top_k_consistency;

pub fn run_example() -> edgesched::Result<f64> {
    let mut cfg = ExperimentConfig::default();
    cfg.training.periods = 1200;
    cfg.training.mean_field_periods = 240;
    let six = train_bin(&cfg, BinScenario { bin: BinLabel::Good, clients: 6 })?.0;
    let three = train_bin(&cfg, BinScenario { bin: BinLabel::Good, clients: 3 })?.0;

    println!("top states with 6 clients and their rank with 3 clients:");
    for s in six.index.top(10) {
        println!("  state {s:>3}: rank {:>3} vs {:>3}", six.index.ranks[s], three.index.ranks[s]);
    }
    let tau = top_k_consistency(&six.index, &three.index, 50);
    println!("Kendall tau over the top 50 states: {tau:.3}");
    Ok(tau)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
