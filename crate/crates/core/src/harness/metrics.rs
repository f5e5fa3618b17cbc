//! Per-run logs and their CSV form. Summary numbers are pure functions of
//! the per-second rows and auction rows, so they can be recomputed from the
//! files alone.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::PolicyName;
use super::stats::mean;
use crate::error::{Error, Result};
use crate::model::{BinLabel, ClientId};
use crate::netsim::QueueKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondRow {
    pub time: f64,
    pub client: ClientId,
    pub bin: BinLabel,
    pub queue: QueueKind,
    pub buffer: f64,
    pub qoe: f64,
    pub stalled: bool,
    pub stall_duration: f64,
    pub goodput: f64,
}

/// One bid in one auction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionRow {
    pub round: u64,
    pub time: f64,
    pub bin: BinLabel,
    /// Clients in the bin at that round.
    pub bin_clients: usize,
    pub client: ClientId,
    pub bid: f64,
    pub won: bool,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRow {
    pub round: u64,
    pub client_id: ClientId,
    pub bin: BinLabel,
    pub queue: QueueKind,
    pub bid: Option<f64>,
    pub price: Option<f64>,
}

/// Which trained table a bin used for a segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchRow {
    pub segment: usize,
    pub time: f64,
    pub bin: BinLabel,
    pub clients: usize,
    pub table_clients: usize,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: PolicyName,
    pub scenario: String,
    pub seed: u64,
    pub rng: String,
    pub mean_qoe: f64,
    pub mean_buffer: f64,
    /// Final stall time per client, averaged over clients.
    pub mean_stall: f64,
    pub mean_bid: f64,
    pub mean_price: f64,
    pub coverage_misses: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLog {
    pub seconds: Vec<SecondRow>,
    pub auctions: Vec<AuctionRow>,
    pub assignments: Vec<AssignmentRow>,
    pub switches: Vec<SwitchRow>,
    pub coverage_misses: usize,
}

pub const RNG_NAME: &str = "ChaCha8Rng";

/// `{policy}_{scenario}_{seed}_{table}.csv` under `dir`.
pub fn log_path(dir: &Path, policy: PolicyName, scenario: &str, seed: u64, table: &str) -> PathBuf {
    dir.join(format!("{policy}_{scenario}_{seed}_{table}.csv"))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::Artifact {
            path: path.to_path_buf(),
            reason: "missing run log; run the experiment first".into(),
        });
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

impl MetricsLog {
    /// Per-client stall time at the end of the run.
    pub fn final_stalls(&self) -> BTreeMap<ClientId, f64> {
        let mut out = BTreeMap::new();
        for r in &self.seconds {
            out.insert(r.client, r.stall_duration);
        }
        out
    }

    pub fn summary(&self, policy: PolicyName, scenario: &str, seed: u64) -> RunSummary {
        let qoe: Vec<f64> = self.seconds.iter().map(|r| r.qoe).collect();
        let buffer: Vec<f64> = self.seconds.iter().map(|r| r.buffer).collect();
        let stalls: Vec<f64> = self.final_stalls().into_values().collect();
        let bids: Vec<f64> = self.auctions.iter().map(|r| r.bid).collect();
        let prices: Vec<f64> = self.auctions.iter().filter(|r| r.won).map(|r| r.price).collect();
        let or_zero = |x: f64| if x.is_nan() { 0.0 } else { x };
        RunSummary {
            policy,
            scenario: scenario.to_string(),
            seed,
            rng: RNG_NAME.to_string(),
            mean_qoe: mean(&qoe),
            mean_buffer: mean(&buffer),
            mean_stall: or_zero(mean(&stalls)),
            mean_bid: or_zero(mean(&bids)),
            mean_price: or_zero(mean(&prices)),
            coverage_misses: self.coverage_misses,
        }
    }

    /// Write the four tables and the summary; returns the paths written.
    pub fn write(&self, dir: &Path, policy: PolicyName, scenario: &str, seed: u64) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = |t: &str| log_path(dir, policy, scenario, seed, t);
        let paths = vec![p("seconds"), p("auctions"), p("assignments"), p("switches"), p("summary")];
        write_rows(&paths[0], &self.seconds)?;
        write_rows(&paths[1], &self.auctions)?;
        write_rows(&paths[2], &self.assignments)?;
        write_rows(&paths[3], &self.switches)?;
        write_rows(&paths[4], &[self.summary(policy, scenario, seed)])?;
        Ok(paths)
    }

    pub fn read(dir: &Path, policy: PolicyName, scenario: &str, seed: u64) -> Result<Self> {
        let p = |t: &str| log_path(dir, policy, scenario, seed, t);
        let summary: Vec<RunSummary> = read_rows(&p("summary"))?;
        Ok(MetricsLog {
            seconds: read_rows(&p("seconds"))?,
            auctions: read_rows(&p("auctions"))?,
            assignments: read_rows(&p("assignments"))?,
            switches: read_rows(&p("switches"))?,
            coverage_misses: summary.first().map_or(0, |s| s.coverage_misses),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, c: ClientId, qoe: f64, stall: f64) -> SecondRow {
        SecondRow {
            time: t,
            client: c,
            bin: BinLabel::Good,
            queue: QueueKind::High,
            buffer: 10.0,
            qoe,
            stalled: false,
            stall_duration: stall,
            goodput: 5.0,
        }
    }

    #[test]
    fn summary_and_roundtrip() {
        let log = MetricsLog {
            seconds: vec![row(1.0, 0, 5.0, 0.0), row(1.0, 1, 3.0, 1.0), row(2.0, 0, 4.0, 0.0), row(2.0, 1, 2.0, 3.0)],
            auctions: vec![AuctionRow {
                round: 0,
                time: 0.0,
                bin: BinLabel::Good,
                bin_clients: 2,
                client: 0,
                bid: 1.5,
                won: true,
                price: 0.0,
            }],
            assignments: vec![AssignmentRow {
                round: 0,
                client_id: 0,
                bin: BinLabel::Good,
                queue: QueueKind::High,
                bid: Some(1.5),
                price: None,
            }],
            switches: Vec::new(),
            coverage_misses: 2,
        };
        let s = log.summary(PolicyName::Auction, "x", 7);
        assert_eq!(s.mean_qoe, 3.5);
        assert_eq!(s.mean_stall, 1.5);
        assert_eq!(s.mean_bid, 1.5);

        let dir = tempfile::tempdir().unwrap();
        log.write(dir.path(), PolicyName::Auction, "x", 7).unwrap();
        assert!(dir.path().join("auction_x_7_seconds.csv").exists());
        let back = MetricsLog::read(dir.path(), PolicyName::Auction, "x", 7).unwrap();
        assert_eq!(back, log);
    }
}
