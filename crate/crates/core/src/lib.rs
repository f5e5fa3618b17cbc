//! Simulation and market-based scheduling of video-streaming clients behind
//! a wireless access point with prioritized queue bins.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: client/system state types and the discrete state encoding.
//! - [`dqs`]: stall-driven QoE model.
//! - [`netsim`]: fluid simulation of queue bins and video playout.
//! - [`kernel`]: trace collection and empirical per-client transition kernels.
//! - [`market`]: (N+1)th-price auction and mean-field order statistics.
//! - [`planner`]: value iteration for the bidding and system-wide MDPs.
//! - [`controller`]: per-period scheduling policies and the composite controller.
//! - [`harness`]: configuration, training, evaluation and report emission.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod dqs;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod market;
pub mod model;
pub mod netsim;
pub mod planner;

pub use error::{Error, Result};
