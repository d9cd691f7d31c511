//! Conflict-based multi-agent motion planning with experience reuse.
//!
//! Agents live on discretized configuration lattices ([`domain`]). Single-agent
//! paths come from a focal weighted A* that can be warm-started from earlier
//! paths ([`search`]); the constraint-tree planners in [`planner`] combine
//! them into collision-free joint solutions.

pub mod domain;
pub mod error;
pub mod model;
pub mod planner;
pub mod postprocess;
pub mod scalar;
pub mod search;

pub use domain::{
    Arm, ArmDomain, CheckCounters, CollisionChecker, Domain, GridDomain, Obstacle, Point2, TransitionCache,
};
pub use error::{DomainError, ModelError, PlanError};
pub use model::{
    conflict_to_constraints, detect_conflicts, AgentId, Configuration, Conflict, ConflictKind, Constraint,
    ConstraintKind, Cost, Experience, PairwiseCollision, Path, Solution, Time, TimedState,
};
pub use planner::{
    default_benchmark_params, plan, ExperienceSource, PlanOutcome, PlanStats, PlanStatus, PlannerConfig, Variant,
};
pub use postprocess::{shortcut_solution, ShortcutReport};
pub use scalar::Real;

pub type PlanarArm = Arm<f64>;
pub type PlanarArmDomain = ArmDomain<f64>;
pub type PlanarArmDomainF32 = ArmDomain<f32>;
pub type Point = Point2<f64>;
