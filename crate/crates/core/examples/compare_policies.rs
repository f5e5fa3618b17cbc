// The full pipeline at small scale: train, evaluate every policy over a
// few seeds, write logs and the aggregate report to a temporary directory.
//
// cargo run --example compare_policies [OUT_DIR]

use edgesched::harness::{run_all, ExperimentConfig, Report};

pub fn run_example(out: std::path::PathBuf) -> edgesched::Result<Report> {
    let mut cfg = ExperimentConfig::static_good(6, 600.0);
    cfg.seeds = (0..4).collect();
    cfg.out_dir = out;
    cfg.training.periods = 1200;
    cfg.training.mean_field_periods = 240;
    let report = run_all(&cfg)?;
    print!("{}", report.table);
    println!("{} report files in {}", report.files.len(), cfg.out_dir.join("report").display());
    Ok(report)
}

fn main() -> edgesched::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("edgesched-compare"));
    run_example(out).map(|_| ())
}
