//! Single-agent search over timed states.

mod constraints;
mod focal;
mod xwastar;

pub use constraints::AgentConstraints;
pub use focal::FocalQueue;
pub use xwastar::{
    heuristic, solve, suffix, FocalMode, Horizon, LowLevelParams, LowLevelQuery, LowLevelResult, NodeId, SearchNode,
    Termination, XwaStar, STEP_COST,
};
