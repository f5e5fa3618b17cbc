//! Value iteration for the per-client bidding MDP and for the system-wide
//! assignment MDP, plus the state index derived from client values.

pub mod client;
pub mod index;
pub mod system;

pub use client::{
    expected_reward, value_iteration_client, win_advantage, BidPolicy, ClientModel,
    ValueFunction, ViSettings,
};
pub use index::{index_of, kendall_tau, top_k_consistency, IndexMap};
pub use system::{
    canonical, feasible_actions, project_popular, select_popular_states, value_iteration_system,
    PopularStateSet, SystemPolicy, SystemSettings,
};
