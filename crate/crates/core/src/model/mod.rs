//! Domain-independent planning vocabulary: configurations, timed paths,
//! experiences, constraints, conflicts and solutions.

mod conflict;

pub use conflict::{
    conflict_to_constraints, conflicts_involving, detect_conflicts, Conflict, ConflictKind, PairwiseCollision,
};

use smallvec::SmallVec;
use std::fmt;
use std::ops::Deref;

use crate::error::ModelError;

pub type AgentId = usize;

/// Search cost in timestep units.
pub type Cost = u32;

/// A timestep index.
pub type Time = u32;

/// A point on an agent's discrete lattice: a grid cell `(x, y)` or a vector
/// of joint indices. Identity is exact integer equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Configuration(SmallVec<[i32; 6]>);

impl Configuration {
    pub fn new(coords: &[i32]) -> Self {
        Configuration(SmallVec::from_slice(coords))
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Copy of `self` with coordinate `axis` shifted by `delta`.
    pub fn offset(&self, axis: usize, delta: i32) -> Self {
        let mut c = self.clone();
        c.0[axis] += delta;
        c
    }

    /// L1 distance between lattice coordinates.
    pub fn l1(&self, other: &Configuration) -> u64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (*a as i64 - *b as i64).unsigned_abs())
            .sum()
    }

    /// Largest per-coordinate displacement.
    pub fn linf(&self, other: &Configuration) -> u32 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (*a as i64 - *b as i64).unsigned_abs() as u32)
            .max()
            .unwrap_or(0)
    }
}

impl Deref for Configuration {
    type Target = [i32];

    fn deref(&self) -> &[i32] {
        &self.0
    }
}

impl From<Vec<i32>> for Configuration {
    fn from(v: Vec<i32>) -> Self {
        Configuration(SmallVec::from_vec(v))
    }
}

impl<const N: usize> From<[i32; N]> for Configuration {
    fn from(v: [i32; N]) -> Self {
        Configuration::new(&v)
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Low-level search state: a configuration at a timestep. Ordered by
/// configuration first, then time.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TimedState {
    pub config: Configuration,
    pub time: Time,
}

impl TimedState {
    pub fn new(config: Configuration, time: Time) -> Self {
        TimedState { config, time }
    }
}

/// Sequence of configurations indexed by timestep `0..T`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Path {
    waypoints: Vec<Configuration>,
}

impl Path {
    pub fn new(waypoints: Vec<Configuration>) -> Self {
        Path { waypoints }
    }

    pub fn waypoints(&self) -> &[Configuration] {
        &self.waypoints
    }

    pub fn into_waypoints(self) -> Vec<Configuration> {
        self.waypoints
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn first(&self) -> Option<&Configuration> {
        self.waypoints.first()
    }

    pub fn last(&self) -> Option<&Configuration> {
        self.waypoints.last()
    }

    /// Configuration at time `t`; after the last waypoint the agent is parked
    /// at its final configuration.
    ///
    /// Panics on an empty path.
    pub fn at(&self, t: Time) -> &Configuration {
        let idx = (t as usize).min(self.waypoints.len() - 1);
        &self.waypoints[idx]
    }

    /// Sum-of-costs contribution of this path; `0` for an empty path.
    pub fn cost(&self) -> Cost {
        path_cost(self).unwrap_or(0)
    }

    /// Timestep index of the final arrival, i.e. the first index of the
    /// trailing run of waypoints equal to the last one.
    pub fn arrival_time(&self) -> Time {
        self.cost()
    }

    /// True iff the path, with parking semantics, breaks `c`.
    pub fn violates(&self, c: &Constraint) -> bool {
        if self.is_empty() {
            return false;
        }
        match &c.kind {
            ConstraintKind::Vertex(q) => self.at(c.time) == q,
            ConstraintKind::Edge(from, to) => self.at(c.time) == from && self.at(c.time + 1) == to,
        }
    }
}

impl From<Vec<Configuration>> for Path {
    fn from(v: Vec<Configuration>) -> Self {
        Path::new(v)
    }
}

/// Sum of per-transition costs. Every step before the final arrival at the
/// last configuration costs one timestep, including waits; waits after the
/// final arrival are free.
pub fn path_cost(path: &Path) -> Result<Cost, ModelError> {
    let last = path.last().ok_or(ModelError::EmptyPath)?;
    let trailing = path.waypoints.iter().rev().take_while(|q| *q == last).count();
    Ok((path.len() - trailing) as Cost)
}

/// A previous low-level solution with the time index removed. Waits and
/// cycles remain as repeated entries.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Experience {
    configs: Vec<Configuration>,
}

impl Experience {
    pub fn new(configs: Vec<Configuration>) -> Self {
        Experience { configs }
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Index of the earliest occurrence of `q`.
    pub fn position(&self, q: &Configuration) -> Option<usize> {
        self.configs.iter().position(|c| c == q)
    }
}

pub fn strip_time(path: &Path) -> Experience {
    Experience::new(path.waypoints.clone())
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum ConstraintKind {
    /// Forbids occupying the configuration at the constraint time.
    Vertex(Configuration),
    /// Forbids traversing `from -> to` departing at the constraint time.
    Edge(Configuration, Configuration),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Constraint {
    pub agent: AgentId,
    pub time: Time,
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn vertex(agent: AgentId, q: Configuration, time: Time) -> Self {
        Constraint {
            agent,
            time,
            kind: ConstraintKind::Vertex(q),
        }
    }

    pub fn edge(agent: AgentId, from: Configuration, to: Configuration, time: Time) -> Self {
        Constraint {
            agent,
            time,
            kind: ConstraintKind::Edge(from, to),
        }
    }
}

/// One path per agent and their total cost.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Solution {
    pub paths: Vec<Path>,
    pub sum_of_costs: Cost,
}

impl Solution {
    pub fn new(paths: Vec<Path>) -> Self {
        let sum_of_costs = paths.iter().map(Path::cost).sum();
        Solution { paths, sum_of_costs }
    }

    /// Length of the longest path.
    pub fn makespan(&self) -> usize {
        self.paths.iter().map(Path::len).max().unwrap_or(0)
    }
}
