// The centralized alternative: value iteration over the most frequent
// joint states, with unseen joint states projected onto the nearest one.
//
// cargo run --example system_mdp

use edgesched::controller::PolicyKind;
use edgesched::harness::{train::joint_states, ExperimentConfig};
use edgesched::kernel::{collect_traces, fit_kernel, BinScenario};
use edgesched::model::BinLabel;
use edgesched::planner::{select_popular_states, value_iteration_system, ClientModel, SystemPolicy};

pub fn run_example() -> edgesched::Result<SystemPolicy> {
    let cfg = ExperimentConfig::default();
    let setup = cfg.sim_setup();
    let disc = &cfg.discretization;
    let key = BinScenario { bin: BinLabel::Good, clients: 4 };
    let policies = [PolicyKind::RoundRobin, PolicyKind::Random];
    let records = collect_traces(&setup, key, &policies, 1200, 120, 5)?;
    let model = ClientModel::from_kernel(&fit_kernel(&records, disc.num_labels())?, disc)?;

    let popular = select_popular_states(&joint_states(&records), 100)?;
    let policy = value_iteration_system(&model, &popular, 2, &disc.centroid_table(), &cfg.planner.system(9))?;
    println!(
        "{} popular joint states, {} feasible assignments, converged in {} sweeps",
        popular.len(),
        policy.actions.len(),
        policy.values.sweeps
    );
    for (i, s) in popular.states.iter().take(8).enumerate() {
        println!(
            "state {:?}  promote positions {:?}  value {:.2}",
            s, policy.actions[policy.choice[i]], policy.values.values[i]
        );
    }
    // an arbitrary joint state is projected before lookup
    let winners = policy.winners_for(&[28, 3, 200, 60], &disc.centroid_table());
    println!("for clients in states [28, 3, 200, 60] promote {winners:?}");
    Ok(policy)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
