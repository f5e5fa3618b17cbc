//! Delivery Quality Score: stall-driven QoE trajectory in `[1, 5]`.
//!
//! A stall starts a raised-cosine descent toward `qoe - drop`, where the
//! first stall of a session uses the larger `first_stall_drop`. Once the
//! descent completes, every further second of stall costs
//! `stall_hold_penalty`. Smooth playback ramps the score back up at
//! `recovery_rate_base * recovery_decay^stalls_seen`, so every stall makes
//! recovery slower.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const QOE_MAX: f64 = 5.0;
pub const QOE_MIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqsParams {
    pub first_stall_drop: f64,
    pub subsequent_stall_drop: f64,
    /// Seconds over which a drop is applied.
    pub drop_duration: f64,
    /// QoE points per second of smooth playback, before decay.
    pub recovery_rate_base: f64,
    pub recovery_decay: f64,
    /// QoE points per second once a drop has completed and playback is
    /// still stalled.
    pub stall_hold_penalty: f64,
}

impl Default for DqsParams {
    fn default() -> Self {
        DqsParams {
            first_stall_drop: 1.5,
            subsequent_stall_drop: 0.75,
            drop_duration: 2.0,
            recovery_rate_base: 0.1,
            recovery_decay: 0.7,
            stall_hold_penalty: 0.1,
        }
    }
}

impl DqsParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dqs.first_stall_drop", self.first_stall_drop),
            ("dqs.subsequent_stall_drop", self.subsequent_stall_drop),
            ("dqs.drop_duration", self.drop_duration),
            ("dqs.recovery_rate_base", self.recovery_rate_base),
            ("dqs.recovery_decay", self.recovery_decay),
            ("dqs.stall_hold_penalty", self.stall_hold_penalty),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be positive"));
            }
        }
        if self.recovery_decay > 1.0 {
            return Err(Error::config("dqs.recovery_decay", "must be <= 1"));
        }
        Ok(())
    }

    /// QoE points per second of recovery after `stalls_seen` stalls.
    pub fn recovery_rate(&self, stalls_seen: u32) -> f64 {
        self.recovery_rate_base * self.recovery_decay.powi(stalls_seen as i32)
    }

    fn drop_for(&self, stall_number: u32) -> f64 {
        if stall_number <= 1 {
            self.first_stall_drop
        } else {
            self.subsequent_stall_drop
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DqsPhase {
    Smooth,
    /// Raised-cosine descent in progress.
    Dropping { elapsed: f64, from: f64 },
    /// Descent finished, still stalled.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PlaybackEvent {
    Playing,
    StallBegin,
    Stalling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DqsState {
    pub qoe: f64,
    pub stalls_seen: u32,
    pub phase: DqsPhase,
    pub drop_target: f64,
}

impl Default for DqsState {
    fn default() -> Self {
        Self::new()
    }
}

impl DqsState {
    /// Sessions start at the top of the scale.
    pub fn new() -> Self {
        DqsState {
            qoe: QOE_MAX,
            stalls_seen: 0,
            phase: DqsPhase::Smooth,
            drop_target: QOE_MAX,
        }
    }
}

pub fn qoe_of(s: &DqsState) -> f64 {
    s.qoe
}

fn clamp_qoe(q: f64) -> f64 {
    q.clamp(QOE_MIN, QOE_MAX)
}

fn advance_stall(mut s: DqsState, dt: f64, p: &DqsParams) -> DqsState {
    match s.phase {
        DqsPhase::Dropping { elapsed, from } => {
            let t = elapsed + dt;
            if t < p.drop_duration {
                let w = 0.5 * (1.0 + (PI * t / p.drop_duration).cos());
                s.qoe = s.drop_target + (from - s.drop_target) * w;
                s.phase = DqsPhase::Dropping { elapsed: t, from };
            } else {
                let rest = t - p.drop_duration;
                s.qoe = s.drop_target - p.stall_hold_penalty * rest;
                s.phase = DqsPhase::Stalled;
            }
        }
        DqsPhase::Stalled | DqsPhase::Smooth => {
            s.qoe -= p.stall_hold_penalty * dt;
            s.phase = DqsPhase::Stalled;
        }
    }
    s.qoe = clamp_qoe(s.qoe);
    s
}

/// Advance the score by `dt` seconds under `event`.
pub fn dqs_step(s: &DqsState, event: PlaybackEvent, dt: f64, p: &DqsParams) -> DqsState {
    debug_assert!(dt > 0.0);
    let mut next = *s;
    match event {
        PlaybackEvent::StallBegin => {
            next.stalls_seen += 1;
            next.drop_target = (next.qoe - p.drop_for(next.stalls_seen)).max(QOE_MIN);
            next.phase = DqsPhase::Dropping {
                elapsed: 0.0,
                from: next.qoe,
            };
            advance_stall(next, dt, p)
        }
        PlaybackEvent::Stalling => advance_stall(next, dt, p),
        PlaybackEvent::Playing => {
            // resuming mid-descent keeps whatever damage was done so far
            next.phase = DqsPhase::Smooth;
            next.drop_target = next.qoe;
            next.qoe = clamp_qoe(next.qoe + p.recovery_rate(next.stalls_seen) * dt);
            next
        }
    }
}
