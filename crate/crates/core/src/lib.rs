//! Hierarchical planning toolkit for deterministic MDPs.
//!
//! Grid layouts compile to explicit [`mdp::DeterministicMdp`]s; [`graph`] computes
//! distances and structure; [`planner`] runs finite-horizon value iteration and
//! checks the closed-form predictions; [`qlearn`] trains tabular agents.

pub mod graph;
pub mod grid;
pub mod instances;
pub mod mdp;
pub mod planner;
pub mod qlearn;
pub mod render;

pub use mdp::{ActionId, DeterministicMdp, MdpBuilder, MdpError, RewardScheme, StateId, Step};
