use thiserror::Error;

use crate::model::AgentId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("empty path")]
    EmptyPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("agent {agent}: joint {joint} index {index} outside limits [{lo}, {hi}]")]
    OutOfLimits {
        agent: AgentId,
        joint: usize,
        index: i32,
        lo: i32,
        hi: i32,
    },
    #[error("agent {agent}: configuration has {got} coordinates, expected {expected}")]
    Dimension {
        agent: AgentId,
        got: usize,
        expected: usize,
    },
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("invalid domain: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("invalid endpoint for agent {agent}: {reason}")]
    InvalidEndpoint { agent: AgentId, reason: String },
    #[error("agent count mismatch: {starts} starts, {goals} goals")]
    AgentCountMismatch { starts: usize, goals: usize },
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("priority order is not a permutation of the agents")]
    InvalidOrder,
    #[error("oracle guard exceeded: {0}")]
    OracleGuard(String),
    #[error("invalid input solution: {0}")]
    InvalidSolution(String),
}
