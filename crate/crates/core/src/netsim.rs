//! Fluid-flow model of the access point: two queue bins, each with a high-
//! and a low-priority queue shaped to a fixed rate, feeding video clients
//! whose playout buffers fill at `goodput / bitrate` and drain in real time.
//!
//! Queues are not work conserving: an empty queue's share is wasted, as
//! with static token-bucket classes.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dqs::{dqs_step, DqsParams, DqsState, PlaybackEvent};
use crate::error::{Error, Result};
use crate::model::{Assignment, BinLabel, ClientAction, ClientId, ClientState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueSpec {
    /// Shaped rate in Mbps.
    pub rate: f64,
    /// Milliseconds.
    pub base_rtt: f64,
    pub loss: f64,
}

impl QueueSpec {
    pub fn effective_rate(&self) -> f64 {
        self.rate * (1.0 - self.loss)
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !(self.rate > 0.0) {
            return Err(Error::config(format!("{field}.rate"), "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.loss) {
            return Err(Error::config(format!("{field}.loss"), "must be in [0, 1)"));
        }
        if !(self.base_rtt >= 0.0) {
            return Err(Error::config(format!("{field}.base_rtt"), "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub label: BinLabel,
    pub high: QueueSpec,
    pub low: QueueSpec,
}

impl Default for BinSpec {
    /// The constrained Good bin: 24 Mbps in total, split 2:1 in favour of the
    /// high-priority queue.
    fn default() -> Self {
        BinSpec {
            label: BinLabel::Good,
            high: QueueSpec {
                rate: 16.0,
                base_rtt: 20.0,
                loss: 0.0,
            },
            low: QueueSpec {
                rate: 8.0,
                base_rtt: 20.0,
                loss: 0.0,
            },
        }
    }
}

impl BinSpec {
    pub fn validate(&self) -> Result<()> {
        self.high.validate("bin.high")?;
        self.low.validate("bin.low")?;
        if self.high.rate < self.low.rate {
            return Err(Error::config("bin.high.rate", "must be >= bin.low.rate"));
        }
        Ok(())
    }

    /// Single queue carrying the bandwidth of both priority queues.
    pub fn shared(&self) -> QueueSpec {
        QueueSpec {
            rate: self.high.rate + self.low.rate,
            base_rtt: self.low.base_rtt,
            loss: self.low.loss,
        }
    }

    pub fn queue(&self, kind: QueueKind) -> QueueSpec {
        match kind {
            QueueKind::High => self.high,
            QueueKind::Low => self.low,
            QueueKind::Shared => self.shared(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelDerating {
    pub rate_factor: f64,
    pub rtt_factor: f64,
    pub loss_increase: f64,
}

impl Default for ChannelDerating {
    fn default() -> Self {
        ChannelDerating {
            rate_factor: 0.5,
            rtt_factor: 3.0,
            loss_increase: 0.02,
        }
    }
}

impl ChannelDerating {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_factor > 0.0 && self.rate_factor <= 1.0) {
            return Err(Error::config("channel.rate_factor", "must be in (0, 1]"));
        }
        if !(self.rtt_factor >= 1.0) {
            return Err(Error::config("channel.rtt_factor", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.loss_increase) {
            return Err(Error::config("channel.loss_increase", "must be in [0, 1)"));
        }
        Ok(())
    }

    fn derate(&self, q: QueueSpec) -> QueueSpec {
        QueueSpec {
            rate: q.rate * self.rate_factor,
            base_rtt: q.base_rtt * self.rtt_factor,
            loss: (q.loss + self.loss_increase).min(0.99),
        }
    }

    pub fn apply(&self, channel: BinLabel, base: &BinSpec) -> BinSpec {
        match channel {
            BinLabel::Good => *base,
            BinLabel::Bad => BinSpec {
                label: BinLabel::Bad,
                high: self.derate(base.high),
                low: self.derate(base.low),
            },
        }
    }
}

/// Bin spec under the given channel condition with the default derating.
pub fn emulate_channel(channel: BinLabel, base: &BinSpec) -> BinSpec {
    ChannelDerating::default().apply(channel, base)
}

/// Per-client Mbps for one tick. Each queue's effective rate is split
/// evenly among its members.
pub fn allocate_goodput(
    bin: &BinSpec,
    members_high: &[ClientId],
    members_low: &[ClientId],
) -> Vec<(ClientId, f64)> {
    let mut out = Vec::with_capacity(members_high.len() + members_low.len());
    for (q, members) in [(&bin.high, members_high), (&bin.low, members_low)] {
        if members.is_empty() {
            continue;
        }
        let share = q.effective_rate() / members.len() as f64;
        out.extend(members.iter().map(|&c| (c, share)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueueKind {
    High,
    Low,
    Shared,
}

impl QueueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QueueKind::High => "high",
            QueueKind::Low => "low",
            QueueKind::Shared => "shared",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlaybackParams {
    /// Mbps of the fixed-resolution stream.
    pub bitrate: f64,
    /// Seconds.
    pub buffer_cap: f64,
    /// Buffered seconds needed to (re)start playout.
    pub resume_threshold: f64,
    /// Ramp-up lag in seconds after a queue change, at `reference_rtt`.
    pub reassign_ramp: f64,
    /// Milliseconds; the ramp scales with `rtt / reference_rtt`.
    pub reference_rtt: f64,
    /// Each tick a queue delivers a uniform fraction in
    /// `[1 - throughput_jitter, 1]` of its effective rate.
    pub throughput_jitter: f64,
}

impl Default for PlaybackParams {
    fn default() -> Self {
        PlaybackParams {
            bitrate: 5.0,
            buffer_cap: 120.0,
            resume_threshold: 2.0,
            reassign_ramp: 1.0,
            reference_rtt: 20.0,
            throughput_jitter: 0.1,
        }
    }
}

impl PlaybackParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bitrate > 0.0) {
            return Err(Error::config("playback.bitrate", "must be > 0"));
        }
        if !(self.buffer_cap > self.resume_threshold && self.resume_threshold > 0.0) {
            return Err(Error::config(
                "playback.resume_threshold",
                "must be > 0 and below buffer_cap",
            ));
        }
        if !(self.reassign_ramp >= 0.0 && self.reference_rtt > 0.0) {
            return Err(Error::config("playback.reassign_ramp", "must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.throughput_jitter) {
            return Err(Error::config("playback.throughput_jitter", "must be in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoClient {
    pub id: ClientId,
    pub bitrate: f64,
    pub buffer: f64,
    pub playing: bool,
    /// Playout has started at least once; a later empty buffer is a stall
    /// rather than start-up delay.
    pub started: bool,
    pub state: ClientState,
    pub dqs: DqsState,
    pub bin: BinLabel,
    /// Cumulative seconds spent stalled.
    pub stall_time: f64,
    pub queue: QueueKind,
    pub last_goodput: f64,
    ramp_left: f64,
}

impl VideoClient {
    pub fn new(id: ClientId, bin: BinLabel, bitrate: f64) -> Self {
        VideoClient {
            id,
            bitrate,
            buffer: 0.0,
            playing: false,
            started: false,
            state: ClientState::fresh(),
            dqs: DqsState::new(),
            bin,
            stall_time: 0.0,
            queue: QueueKind::Low,
            last_goodput: 0.0,
            ramp_left: 0.0,
        }
    }

    pub fn stalled(&self) -> bool {
        self.started && !self.playing
    }
}

/// Advance one client's playout by `dt` seconds at `goodput` Mbps.
pub fn step_playback(
    c: &VideoClient,
    goodput: f64,
    dt: f64,
    playback: &PlaybackParams,
    dqs: &DqsParams,
) -> (VideoClient, Option<PlaybackEvent>) {
    debug_assert!(dt > 0.0);
    let mut next = c.clone();
    next.buffer = (next.buffer + dt * goodput / next.bitrate).min(playback.buffer_cap);

    let event = if next.playing {
        next.buffer -= dt;
        if next.buffer <= 0.0 {
            next.buffer = 0.0;
            next.playing = false;
            Some(PlaybackEvent::StallBegin)
        } else {
            Some(PlaybackEvent::Playing)
        }
    } else if next.buffer >= playback.resume_threshold {
        next.playing = true;
        next.started = true;
        Some(PlaybackEvent::Playing)
    } else if next.started {
        Some(PlaybackEvent::Stalling)
    } else {
        None
    };

    if matches!(
        event,
        Some(PlaybackEvent::StallBegin) | Some(PlaybackEvent::Stalling)
    ) {
        next.stall_time += dt;
    }
    if let Some(e) = event {
        next.dqs = dqs_step(&next.dqs, e, dt, dqs);
    }
    next.last_goodput = goodput;
    next.state = ClientState {
        buffer: next.buffer,
        stalls: next.dqs.stalls_seen,
        qoe: next.dqs.qoe,
    };
    (next, event)
}

/// One client's view of a simulated second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub time: f64,
    pub client: ClientId,
    pub buffer: f64,
    pub qoe: f64,
    pub stalled: bool,
    pub stall_duration: f64,
    pub goodput: f64,
    pub queue: QueueKind,
    pub bin: BinLabel,
}

/// The access point and its attached clients.
#[derive(Debug, Clone)]
pub struct AccessPoint {
    pub good: BinSpec,
    pub bad: BinSpec,
    pub playback: PlaybackParams,
    pub dqs: DqsParams,
    pub time: f64,
    clients: Vec<VideoClient>,
    parked: BTreeMap<ClientId, VideoClient>,
}

impl AccessPoint {
    pub fn new(good: BinSpec, bad: BinSpec, playback: PlaybackParams, dqs: DqsParams) -> Self {
        AccessPoint {
            good,
            bad,
            playback,
            dqs,
            time: 0.0,
            clients: Vec::new(),
            parked: BTreeMap::new(),
        }
    }

    pub fn bin_spec(&self, bin: BinLabel) -> &BinSpec {
        match bin {
            BinLabel::Good => &self.good,
            BinLabel::Bad => &self.bad,
        }
    }

    /// Active clients in id order.
    pub fn clients(&self) -> &[VideoClient] {
        &self.clients
    }

    /// Set the active clients and their bins. Sessions that leave are parked
    /// and resume where they stopped if they return.
    pub fn set_membership(&mut self, members: &[(ClientId, BinLabel)]) {
        let mut current: BTreeMap<ClientId, VideoClient> =
            self.clients.drain(..).map(|c| (c.id, c)).collect();
        let mut next = Vec::with_capacity(members.len());
        for &(id, bin) in members {
            let mut c = current
                .remove(&id)
                .or_else(|| self.parked.remove(&id))
                .unwrap_or_else(|| VideoClient::new(id, bin, self.playback.bitrate));
            c.bin = bin;
            next.push(c);
        }
        self.parked.extend(current);
        next.sort_by_key(|c| c.id);
        self.clients = next;
    }

    /// Restart every active session from scratch.
    pub fn reset_sessions(&mut self) {
        for c in &mut self.clients {
            *c = VideoClient::new(c.id, c.bin, self.playback.bitrate);
        }
        self.parked.clear();
    }

    fn queue_for(&self, assignment: &Assignment, c: &VideoClient) -> QueueKind {
        if assignment.shared_queue {
            QueueKind::Shared
        } else {
            match assignment.action_of(c.id) {
                Some(ClientAction::Win) => QueueKind::High,
                _ => QueueKind::Low,
            }
        }
    }

    /// Apply a new assignment; clients that change queue start a ramp.
    pub fn apply_assignment(&mut self, assignment: &Assignment) {
        let queues: Vec<QueueKind> = self
            .clients
            .iter()
            .map(|c| self.queue_for(assignment, c))
            .collect();
        for (c, q) in self.clients.iter_mut().zip(queues) {
            if c.queue != q {
                let rtt = match c.bin {
                    BinLabel::Good => self.good.queue(q).base_rtt,
                    BinLabel::Bad => self.bad.queue(q).base_rtt,
                };
                c.ramp_left = self.playback.reassign_ramp * rtt / self.playback.reference_rtt;
                c.queue = q;
            }
        }
    }

    /// Advance one second (or `dt`) and return a record per active client.
    pub fn tick(&mut self, dt: f64, rng: &mut ChaCha8Rng) -> Vec<TickRecord> {
        let mut goodput = vec![0.0; self.clients.len()];
        for bin in BinLabel::ALL {
            let spec = *self.bin_spec(bin);
            for kind in [QueueKind::High, QueueKind::Low, QueueKind::Shared] {
                let members: Vec<usize> = self
                    .clients
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.bin == bin && c.queue == kind)
                    .map(|(i, _)| i)
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let j = self.playback.throughput_jitter;
                let factor = if j > 0.0 { rng.gen_range(1.0 - j..=1.0) } else { 1.0 };
                let share = spec.queue(kind).effective_rate() * factor / members.len() as f64;
                for i in members {
                    goodput[i] = share;
                }
            }
        }

        self.time += dt;
        let mut out = Vec::with_capacity(self.clients.len());
        for (c, g) in self.clients.iter_mut().zip(goodput) {
            let mut g = g;
            if c.ramp_left > 0.0 {
                g = g.min(c.last_goodput);
                c.ramp_left = (c.ramp_left - dt).max(0.0);
            }
            let (next, _) = step_playback(c, g, dt, &self.playback, &self.dqs);
            *c = VideoClient {
                ramp_left: c.ramp_left,
                ..next
            };
            out.push(TickRecord {
                time: self.time,
                client: c.id,
                buffer: c.buffer,
                qoe: c.dqs.qoe,
                stalled: c.stalled(),
                stall_duration: c.stall_time,
                goodput: g,
                queue: c.queue,
                bin: c.bin,
            });
        }
        out
    }
}
