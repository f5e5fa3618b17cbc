//! Per-client transition kernel `P(s' | s, a)` fitted from simulated traces.
//!
//! All clients share one kernel. Pairs `(s, a)` that never appear in the
//! trace fall back to a self-loop.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{Controller, PolicyKind, SimSetup};
use crate::error::{Error, Result};
use crate::model::{BinLabel, ClientAction, ClientId, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRecord {
    /// Decision period index.
    pub t: u64,
    pub client_id: ClientId,
    pub s: Label,
    pub a: ClientAction,
    pub s_next: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    num_labels: usize,
    /// Indexed by `s * 2 + a.index()`; sparse `(s_next, prob)` sorted by label.
    rows: Vec<Vec<(Label, f64)>>,
    visits: Vec<u64>,
    observed: Vec<bool>,
}

impl TransitionKernel {
    fn slot(s: Label, a: ClientAction) -> usize {
        s * 2 + a.index()
    }

    fn empty(num_labels: usize) -> Self {
        let rows = (0..num_labels * 2).map(|i| vec![(i / 2, 1.0)]).collect();
        TransitionKernel {
            num_labels,
            rows,
            visits: vec![0; num_labels * 2],
            observed: vec![false; num_labels * 2],
        }
    }

    /// Build from explicit rows; unspecified pairs self-loop.
    pub fn from_rows(
        num_labels: usize,
        rows: impl IntoIterator<Item = ((Label, ClientAction), Vec<(Label, f64)>)>,
    ) -> Result<Self> {
        let mut k = Self::empty(num_labels);
        for ((s, a), mut row) in rows {
            if s >= num_labels || row.iter().any(|&(n, _)| n >= num_labels) {
                return Err(Error::LabelOutOfRange {
                    label: s.max(row.iter().map(|r| r.0).max().unwrap_or(0)),
                    size: num_labels,
                });
            }
            let total: f64 = row.iter().map(|r| r.1).sum();
            if (total - 1.0).abs() > 1e-9 || row.iter().any(|r| r.1 < 0.0) {
                return Err(Error::config("kernel", format!("row ({s}, {a:?}) is not a distribution")));
            }
            row.sort_by_key(|r| r.0);
            let slot = Self::slot(s, a);
            k.rows[slot] = row;
            k.observed[slot] = true;
        }
        Ok(k)
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Next-state distribution; self-loop for unvisited pairs.
    pub fn lookup(&self, s: Label, a: ClientAction) -> Result<&[(Label, f64)]> {
        if s >= self.num_labels {
            return Err(Error::LabelOutOfRange {
                label: s,
                size: self.num_labels,
            });
        }
        Ok(&self.rows[Self::slot(s, a)])
    }

    pub(crate) fn row(&self, s: Label, a: ClientAction) -> &[(Label, f64)] {
        &self.rows[Self::slot(s, a)]
    }

    pub fn visit_count(&self, s: Label, a: ClientAction) -> u64 {
        self.visits[Self::slot(s, a)]
    }

    pub fn is_observed(&self, s: Label, a: ClientAction) -> bool {
        self.observed[Self::slot(s, a)]
    }

    /// Write observed rows as `s,a,s_next,prob`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "s,a,s_next,prob")?;
            for s in 0..self.num_labels {
                for a in ClientAction::ALL {
                    if !self.is_observed(s, a) {
                        continue;
                    }
                    for &(n, p) in self.row(s, a) {
                        writeln!(w, "{s},{},{n},{p}", a.as_str())?;
                    }
                }
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, num_labels: usize) -> Result<Self> {
        let bad = |reason: String| Error::Artifact {
            path: path.to_path_buf(),
            reason,
        };
        let mut reader = csv::Reader::from_path(path)?;
        let mut rows: BTreeMap<(Label, ClientAction), Vec<(Label, f64)>> = BTreeMap::new();
        for rec in reader.records() {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(bad(format!("expected 4 columns, got {}", rec.len())));
            }
            let s: Label = rec[0].parse().map_err(|_| bad(format!("bad label {}", &rec[0])))?;
            let a = ClientAction::parse(&rec[1]).ok_or_else(|| bad(format!("bad action {}", &rec[1])))?;
            let n: Label = rec[2].parse().map_err(|_| bad(format!("bad label {}", &rec[2])))?;
            let p: f64 = rec[3].parse().map_err(|_| bad(format!("bad probability {}", &rec[3])))?;
            rows.entry((s, a)).or_default().push((n, p));
        }
        Self::from_rows(num_labels, rows)
    }
}

/// Empirical kernel: `P(s'|s,a) = count(s,a,s') / count(s,a)`.
pub fn fit_kernel(records: &[TransitionRecord], num_labels: usize) -> Result<TransitionKernel> {
    if records.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut counts: BTreeMap<(usize, Label), u64> = BTreeMap::new();
    let mut k = TransitionKernel::empty(num_labels);
    for r in records {
        for l in [r.s, r.s_next] {
            if l >= num_labels {
                return Err(Error::LabelOutOfRange {
                    label: l,
                    size: num_labels,
                });
            }
        }
        let slot = TransitionKernel::slot(r.s, r.a);
        *counts.entry((slot, r.s_next)).or_default() += 1;
        k.visits[slot] += 1;
    }
    let mut current = usize::MAX;
    for ((slot, next), c) in counts {
        if slot != current {
            k.rows[slot].clear();
            k.observed[slot] = true;
            current = slot;
        }
        k.rows[slot].push((next, c as f64 / k.visits[slot] as f64));
    }
    Ok(k)
}

/// Which bin and how many clients to simulate while collecting traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinScenario {
    pub bin: BinLabel,
    pub clients: usize,
}

/// Run the simulator for `duration` decision periods and record one
/// transition per client per period. Sessions restart every
/// `episode_periods`, and consecutive episodes cycle through `policies`.
pub fn collect_traces(
    setup: &SimSetup,
    scenario: BinScenario,
    policies: &[PolicyKind],
    duration: u64,
    episode_periods: u64,
    seed: u64,
) -> Result<Vec<TransitionRecord>> {
    if policies.is_empty() {
        return Err(Error::config("training.policies", "no trace policies given"));
    }
    let episode_periods = episode_periods.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ap = setup.access_point();
    let members: Vec<(ClientId, BinLabel)> =
        (0..scenario.clients).map(|c| (c, scenario.bin)).collect();
    ap.set_membership(&members);
    let mut controller = Controller::new(setup.admission_limit, setup.discretization.clone());
    let mut records = Vec::with_capacity((duration as usize) * scenario.clients);

    for t in 0..duration {
        if t % episode_periods == 0 {
            ap.reset_sessions();
            controller.reset();
        }
        let policy = &policies[((t / episode_periods) as usize) % policies.len()];
        let before: Vec<Label> = ap
            .clients()
            .iter()
            .map(|c| setup.discretization.discretize(&c.state).label)
            .collect();
        let decision = controller.decide_uniform(policy, &ap, t, &mut rng);
        setup.run_period(&mut ap, &decision.assignment, &mut rng, |_| {});
        for (c, s) in ap.clients().iter().zip(before) {
            records.push(TransitionRecord {
                t,
                client_id: c.id,
                s,
                a: decision.assignment.action_of(c.id).unwrap_or(ClientAction::Lose),
                s_next: setup.discretization.discretize(&c.state).label,
            });
        }
    }
    Ok(records)
}

/// Write records as `t,client_id,s,a,s_next`.
pub fn save_traces(records: &[TransitionRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "client_id", "s", "a", "s_next"])?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.client_id.to_string(),
            r.s.to_string(),
            r.a.as_str().to_string(),
            r.s_next.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_traces(path: &Path) -> Result<Vec<TransitionRecord>> {
    let bad = |reason: String| Error::Artifact {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() != 5 {
            return Err(bad(format!("expected 5 columns, got {}", rec.len())));
        }
        let num = |i: usize| -> Result<u64> {
            rec[i].parse().map_err(|_| bad(format!("bad integer {}", &rec[i])))
        };
        out.push(TransitionRecord {
            t: num(0)?,
            client_id: num(1)? as ClientId,
            s: num(2)? as Label,
            a: ClientAction::parse(&rec[3]).ok_or_else(|| bad(format!("bad action {}", &rec[3])))?,
            s_next: num(4)? as Label,
        });
    }
    Ok(out)
}
