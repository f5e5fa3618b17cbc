// Six HD sessions behind a 24 Mbps bin under round-robin promotion:
// per-client buffer, QoE and stall time after five minutes.
//
// cargo run --example access_point

use edgesched::controller::{Controller, PolicyKind, SimSetup};
use edgesched::harness::ExperimentConfig;
use edgesched::model::BinLabel;
use edgesched::netsim::TickRecord;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> edgesched::Result<Vec<TickRecord>> {
    let setup: SimSetup = ExperimentConfig::default().sim_setup();
    let mut ap = setup.access_point();
    let members: Vec<_> = (0..6).map(|c| (c, BinLabel::Good)).collect();
    ap.set_membership(&members);
    let mut ctl = Controller::new(setup.admission_limit, setup.discretization.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut last = Vec::new();
    for round in 0..30 {
        let d = ctl.decide_uniform(&PolicyKind::RoundRobin, &ap, round, &mut rng);
        setup.run_period(&mut ap, &d.assignment, &mut rng, |recs| last = recs.to_vec());
    }
    for r in &last {
        println!(
            "client {} queue {:<6} buffer {:>6.1}s qoe {:.2} stalled {:>5.0}s",
            r.client,
            r.queue.as_str(),
            r.buffer,
            r.qoe,
            r.stall_duration
        );
    }
    Ok(last)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
