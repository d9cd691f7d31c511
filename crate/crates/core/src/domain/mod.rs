//! Concrete state spaces and the per-query validity checker.

pub mod arm;
mod checker;
pub mod geometry;
pub mod grid;

pub use arm::{Arm, ArmDomain, Obstacle};
pub use checker::{CheckCounters, CollisionChecker, TransitionCache};
pub use geometry::Point2;
pub use grid::GridDomain;

use crate::model::{AgentId, Configuration};

/// An agent state space with static and inter-agent collision geometry.
///
/// All methods are raw geometric queries without caching or counting; the
/// planners go through a [`CollisionChecker`].
pub trait Domain: Send + Sync {
    /// Number of agents this domain describes, or `None` when any number of
    /// identical agents may share it.
    fn agent_count(&self) -> Option<usize>;

    /// Number of lattice coordinates for `agent`.
    fn dimension(&self, agent: AgentId) -> usize;

    fn in_bounds(&self, agent: AgentId, q: &Configuration) -> bool;

    /// In-bounds single-primitive neighbours of `q` (waits excluded), in a
    /// fixed deterministic order. Static validity is not checked.
    fn motion_primitives(&self, agent: AgentId, q: &Configuration, out: &mut Vec<Configuration>);

    /// `q` does not touch the static environment (or itself).
    fn state_free(&self, agent: AgentId, q: &Configuration) -> bool;

    /// The straight motion `from -> to` is free strictly between its
    /// endpoints. Must be symmetric in its endpoints.
    fn segment_free(&self, agent: AgentId, from: &Configuration, to: &Configuration) -> bool;

    /// Bodies of two agents overlap while stationary.
    fn bodies_overlap(&self, a: AgentId, qa: &Configuration, b: AgentId, qb: &Configuration) -> bool;

    /// Bodies of two agents overlap strictly inside their synchronized
    /// transitions.
    fn sweeps_overlap(
        &self,
        a: AgentId,
        from_a: &Configuration,
        to_a: &Configuration,
        b: AgentId,
        from_b: &Configuration,
        to_b: &Configuration,
    ) -> bool;

    /// Admissible cost-to-go estimate in timestep units.
    fn heuristic(&self, agent: AgentId, q: &Configuration, goal: &Configuration) -> f64;

    /// Motion along `from -> to` in lattice units.
    fn motion_units(&self, _agent: AgentId, from: &Configuration, to: &Configuration) -> u64 {
        from.l1(to)
    }

    /// Physical size of one lattice unit of motion (radians for arms).
    fn motion_scale(&self, _agent: AgentId) -> f64 {
        1.0
    }

    /// Number of lattice vertices, saturating.
    fn lattice_size(&self, agent: AgentId) -> usize;

    /// Upper bound on successors per state, wait included.
    fn max_branching(&self, agent: AgentId) -> usize;
}

impl<D: Domain + ?Sized> Domain for &D {
    fn agent_count(&self) -> Option<usize> {
        (**self).agent_count()
    }
    fn dimension(&self, agent: AgentId) -> usize {
        (**self).dimension(agent)
    }
    fn in_bounds(&self, agent: AgentId, q: &Configuration) -> bool {
        (**self).in_bounds(agent, q)
    }
    fn motion_primitives(&self, agent: AgentId, q: &Configuration, out: &mut Vec<Configuration>) {
        (**self).motion_primitives(agent, q, out)
    }
    fn state_free(&self, agent: AgentId, q: &Configuration) -> bool {
        (**self).state_free(agent, q)
    }
    fn segment_free(&self, agent: AgentId, from: &Configuration, to: &Configuration) -> bool {
        (**self).segment_free(agent, from, to)
    }
    fn bodies_overlap(&self, a: AgentId, qa: &Configuration, b: AgentId, qb: &Configuration) -> bool {
        (**self).bodies_overlap(a, qa, b, qb)
    }
    fn sweeps_overlap(
        &self,
        a: AgentId,
        from_a: &Configuration,
        to_a: &Configuration,
        b: AgentId,
        from_b: &Configuration,
        to_b: &Configuration,
    ) -> bool {
        (**self).sweeps_overlap(a, from_a, to_a, b, from_b, to_b)
    }
    fn heuristic(&self, agent: AgentId, q: &Configuration, goal: &Configuration) -> f64 {
        (**self).heuristic(agent, q, goal)
    }
    fn motion_units(&self, agent: AgentId, from: &Configuration, to: &Configuration) -> u64 {
        (**self).motion_units(agent, from, to)
    }
    fn motion_scale(&self, agent: AgentId) -> f64 {
        (**self).motion_scale(agent)
    }
    fn lattice_size(&self, agent: AgentId) -> usize {
        (**self).lattice_size(agent)
    }
    fn max_branching(&self, agent: AgentId) -> usize {
        (**self).max_branching(agent)
    }
}
