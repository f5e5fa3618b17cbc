//! Aggregate tables across seeds: mean QoE with confidence intervals, CDFs,
//! bid histograms and QoE over time, one CSV per figure plus a text table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, PolicyName};
use super::run::RunOutput;
use super::stats::{ecdf, mean_ci, MeanCi};
use crate::error::{Error, Result};
use crate::model::BinLabel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyReport {
    pub policy: PolicyName,
    pub seeds: usize,
    pub qoe: MeanCi,
    pub buffer: MeanCi,
    pub stall: MeanCi,
    /// Absent for policies that do not bid.
    pub bid: Option<MeanCi>,
    pub coverage_misses: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub policies: Vec<PolicyReport>,
    pub table: String,
    pub files: Vec<PathBuf>,
}

impl Report {
    pub fn get(&self, policy: PolicyName) -> Option<&PolicyReport> {
        self.policies.iter().find(|p| p.policy == policy)
    }
}

pub const CONFIDENCE: f64 = 0.95;

/// Two-decimal rounding keeps CDF files small without visibly changing them.
fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct CdfRow {
    value: f64,
    cdf: f64,
}

#[derive(Serialize)]
struct BidRow {
    bin_clients: usize,
    bid: f64,
    count: usize,
    fraction: f64,
}

#[derive(Serialize)]
struct EvolutionRow {
    time: f64,
    good: Option<f64>,
    bad: Option<f64>,
    all: f64,
}

#[derive(Serialize)]
struct MeanRow {
    policy: PolicyName,
    seeds: usize,
    qoe: f64,
    qoe_lo: f64,
    qoe_hi: f64,
    buffer: f64,
    buffer_lo: f64,
    buffer_hi: f64,
    stall: f64,
    stall_lo: f64,
    stall_hi: f64,
    bid: Option<f64>,
}

fn policy_report(policy: PolicyName, runs: &[&RunOutput], scenario: &str) -> PolicyReport {
    let summaries: Vec<_> = runs.iter().map(|r| r.log.summary(policy, scenario, r.seed)).collect();
    let col = |f: fn(&super::metrics::RunSummary) -> f64| -> Vec<f64> { summaries.iter().map(f).collect() };
    let bids_placed = runs.iter().any(|r| !r.log.auctions.is_empty());
    PolicyReport {
        policy,
        seeds: runs.len(),
        qoe: mean_ci(&col(|s| s.mean_qoe), CONFIDENCE),
        buffer: mean_ci(&col(|s| s.mean_buffer), CONFIDENCE),
        stall: mean_ci(&col(|s| s.mean_stall), CONFIDENCE),
        bid: bids_placed.then(|| mean_ci(&col(|s| s.mean_bid), CONFIDENCE)),
        coverage_misses: summaries.iter().map(|s| s.coverage_misses).sum(),
    }
}

fn table(reports: &[PolicyReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>5} {:>22} {:>22} {:>22} {:>8}",
        "policy", "seeds", "mean QoE (95% CI)", "buffer s (95% CI)", "stall s (95% CI)", "bid"
    );
    let fmt = |c: &MeanCi| format!("{:.3} [{:.3}, {:.3}]", c.mean, c.lo, c.hi);
    for r in reports {
        let bid = r.bid.map_or("-".to_string(), |b| format!("{:.3}", b.mean));
        let _ = writeln!(
            out,
            "{:<14} {:>5} {:>22} {:>22} {:>22} {:>8}",
            r.policy.as_str(),
            r.seeds,
            fmt(&r.qoe),
            fmt(&r.buffer),
            fmt(&r.stall),
            bid
        );
    }
    out
}

/// Write every aggregate file under `dir` and return the summary.
pub fn emit_report(cfg: &ExperimentConfig, runs: &[RunOutput], dir: &Path) -> Result<Report> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let mut reports = Vec::new();
    for &policy in &cfg.policies {
        let mine: Vec<&RunOutput> = runs.iter().filter(|r| r.policy == policy).collect();
        if mine.is_empty() {
            continue;
        }
        reports.push(policy_report(policy, &mine, &cfg.name));

        let seconds = mine.iter().flat_map(|r| r.log.seconds.iter());
        let qoe: Vec<f64> = seconds.clone().map(|s| round2(s.qoe)).collect();
        let buffer: Vec<f64> = seconds.clone().map(|s| round2(s.buffer)).collect();
        let stall: Vec<f64> = mine
            .iter()
            .flat_map(|r| r.log.final_stalls().into_values())
            .collect();
        for (name, xs) in [("qoe", &qoe), ("buffer", &buffer), ("stall", &stall)] {
            let path = dir.join(format!("{policy}_cdf_{name}.csv"));
            write_csv(&path, ecdf(xs).into_iter().map(|(value, cdf)| CdfRow { value, cdf }))?;
            files.push(path);
        }

        let auctions = mine.iter().flat_map(|r| r.log.auctions.iter());
        let mut hist: BTreeMap<usize, BTreeMap<u64, usize>> = BTreeMap::new();
        for a in auctions {
            *hist.entry(a.bin_clients).or_default().entry(a.bid.to_bits()).or_default() += 1;
        }
        if !hist.is_empty() {
            let path = dir.join(format!("{policy}_bids.csv"));
            let rows = hist.iter().flat_map(|(&m, counts)| {
                let total: usize = counts.values().sum();
                let mut v: Vec<(f64, usize)> = counts.iter().map(|(&b, &c)| (f64::from_bits(b), c)).collect();
                v.sort_by(|a, b| a.0.total_cmp(&b.0));
                v.into_iter().map(move |(bid, count)| BidRow {
                    bin_clients: m,
                    bid,
                    count,
                    fraction: count as f64 / total as f64,
                })
            });
            write_csv(&path, rows)?;
            files.push(path);
        }

        // (sum, count) per second for good, bad, all
        let mut evo: BTreeMap<u64, [(f64, usize); 3]> = BTreeMap::new();
        for s in mine.iter().flat_map(|r| r.log.seconds.iter()) {
            let e = evo.entry(s.time.to_bits()).or_default();
            let slot = match s.bin {
                BinLabel::Good => 0,
                BinLabel::Bad => 1,
            };
            e[slot].0 += s.qoe;
            e[slot].1 += 1;
            e[2].0 += s.qoe;
            e[2].1 += 1;
        }
        let avg = |(s, n): (f64, usize)| (n > 0).then(|| s / n as f64);
        let mut rows: Vec<EvolutionRow> = evo
            .into_iter()
            .map(|(t, e)| EvolutionRow {
                time: f64::from_bits(t),
                good: avg(e[0]),
                bad: avg(e[1]),
                all: avg(e[2]).unwrap_or(f64::NAN),
            })
            .collect();
        rows.sort_by(|a, b| a.time.total_cmp(&b.time));
        let path = dir.join(format!("{policy}_qoe_evolution.csv"));
        write_csv(&path, rows)?;
        files.push(path);
    }

    let path = dir.join("mean_qoe.csv");
    write_csv(
        &path,
        reports.iter().map(|r| MeanRow {
            policy: r.policy,
            seeds: r.seeds,
            qoe: r.qoe.mean,
            qoe_lo: r.qoe.lo,
            qoe_hi: r.qoe.hi,
            buffer: r.buffer.mean,
            buffer_lo: r.buffer.lo,
            buffer_hi: r.buffer.hi,
            stall: r.stall.mean,
            stall_lo: r.stall.lo,
            stall_hi: r.stall.hi,
            bid: r.bid.map(|b| b.mean),
        }),
    )?;
    files.push(path);

    let table = table(&reports);
    let path = dir.join("comparison.txt");
    std::fs::write(&path, &table).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(Report {
        policies: reports,
        table,
        files,
    })
}
