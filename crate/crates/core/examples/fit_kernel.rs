// Collect transition traces under exploratory policies and fit the
// per-client kernel P(s' | s, a).
//
// cargo run --example fit_kernel

use edgesched::controller::PolicyKind;
use edgesched::harness::ExperimentConfig;
use edgesched::kernel::{collect_traces, fit_kernel, BinScenario, TransitionKernel};
use edgesched::model::{BinLabel, ClientAction};

pub fn run_example() -> edgesched::Result<TransitionKernel> {
    let cfg = ExperimentConfig::default();
    let setup = cfg.sim_setup();
    let key = BinScenario { bin: BinLabel::Good, clients: 6 };
    let policies = [PolicyKind::RoundRobin, PolicyKind::GreedyBuffer, PolicyKind::Random];
    let records = collect_traces(&setup, key, &policies, 600, 120, 42)?;
    let kernel = fit_kernel(&records, cfg.discretization.num_labels())?;

    let visited = (0..kernel.num_labels())
        .filter(|&s| ClientAction::ALL.iter().any(|&a| kernel.is_observed(s, a)))
        .count();
    println!("{} transitions, {visited} of {} states visited", records.len(), kernel.num_labels());

    let start = cfg.discretization.discretize(&edgesched::model::ClientState::fresh()).label;
    for a in ClientAction::ALL {
        println!("from fresh state {start} on {}:", a.as_str());
        for (s, p) in kernel.lookup(start, a)? {
            println!("  -> {s:>3}  {p:.3}");
        }
    }
    Ok(kernel)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
