// Playback QoE through two stalls and the slow recovery afterwards.
//
// cargo run --example dqs_trajectory

use edgesched::dqs::{dqs_step, DqsParams, DqsState, PlaybackEvent};

pub fn run_example() -> edgesched::Result<Vec<f64>> {
    let params = DqsParams::default();
    params.validate()?;
    // (event, seconds it lasts)
    let script = [
        (PlaybackEvent::Playing, 5),
        (PlaybackEvent::StallBegin, 1),
        (PlaybackEvent::Stalling, 3),
        (PlaybackEvent::Playing, 20),
        (PlaybackEvent::StallBegin, 1),
        (PlaybackEvent::Stalling, 1),
        (PlaybackEvent::Playing, 30),
    ];
    let mut state = DqsState::new();
    let mut trace = vec![state.qoe];
    for (event, secs) in script {
        for _ in 0..secs {
            state = dqs_step(&state, event, 1.0, &params);
            trace.push(state.qoe);
        }
    }
    for (t, q) in trace.iter().enumerate().step_by(5) {
        println!("t={t:>3}s  qoe={q:.3}");
    }
    println!("stalls seen: {}", state.stalls_seen);
    Ok(trace)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
