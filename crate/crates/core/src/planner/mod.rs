//! Multi-agent planners: the constraint-tree family, prioritized planning and
//! an exact composite-space oracle.

mod cbs;
mod oracle;
mod prioritized;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use cbs::{plan_ct, CtQueue};
pub use oracle::{plan_coupled_oracle, OracleLimits};
pub use prioritized::plan_prioritized;

use crate::domain::{CheckCounters, CollisionChecker, Domain};
use crate::error::PlanError;
use crate::model::{AgentId, Configuration, Constraint, Cost, Experience, Path, Solution};
use crate::search::{FocalMode, Horizon, LowLevelParams, Termination};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Cbs,
    Bcbs,
    Ecbs,
    XCbs,
    XEcbs,
    Prioritized,
    CoupledOracle,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Cbs,
        Variant::Bcbs,
        Variant::Ecbs,
        Variant::XCbs,
        Variant::XEcbs,
        Variant::Prioritized,
        Variant::CoupledOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Cbs => "CBS",
            Variant::Bcbs => "BCBS",
            Variant::Ecbs => "ECBS",
            Variant::XCbs => "xCBS",
            Variant::XEcbs => "xECBS",
            Variant::Prioritized => "PP",
            Variant::CoupledOracle => "Oracle",
        }
    }

    /// Constraint-tree variants.
    pub fn is_ct(self) -> bool {
        !matches!(self, Variant::Prioritized | Variant::CoupledOracle)
    }

    /// The high level keeps a focal list.
    pub fn high_level_focal(self) -> bool {
        matches!(self, Variant::Bcbs | Variant::Ecbs | Variant::XEcbs)
    }

    /// FOCAL is bounded by the lower bound rather than the cost.
    pub fn uses_lower_bound(self) -> bool {
        matches!(self, Variant::Ecbs | Variant::XEcbs)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown planner `{s}`"))
    }
}

/// Which earlier paths seed a child replan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExperienceSource {
    /// The replanned agent's path in the parent node.
    #[default]
    ParentPath,
    /// Every distinct path of the agent along the branch to the root.
    BranchPaths,
    /// Every distinct path of the agent generated anywhere in the tree.
    AllCtPaths,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    pub variant: Variant,
    /// Low-level heuristic inflation.
    pub w1: f64,
    /// Low-level focal factor.
    pub w2: f64,
    /// High-level focal factor.
    pub wh: f64,
    pub use_experience: bool,
    pub experience_source: ExperienceSource,
    pub termination: Termination,
    pub horizon: Horizon,
    pub timeout: Option<Duration>,
    pub use_cache: bool,
    /// Priority order for prioritized planning; identity when `None`.
    pub order: Option<Vec<AgentId>>,
    pub oracle_limits: OracleLimits,
    /// Keep a record of every child replan (for offline comparison).
    pub record_replans: bool,
    pub seed: u64,
}

impl PlannerConfig {
    fn base(variant: Variant) -> Self {
        PlannerConfig {
            variant,
            w1: 1.0,
            w2: 1.0,
            wh: 1.0,
            use_experience: false,
            experience_source: ExperienceSource::ParentPath,
            termination: Termination::Simple,
            horizon: Horizon::default(),
            timeout: None,
            use_cache: true,
            order: None,
            oracle_limits: OracleLimits::default(),
            record_replans: false,
            seed: 0,
        }
    }

    pub fn cbs() -> Self {
        Self::base(Variant::Cbs)
    }

    pub fn bcbs(w_low: f64, wh: f64) -> Self {
        PlannerConfig {
            w2: w_low,
            wh,
            ..Self::base(Variant::Bcbs)
        }
    }

    pub fn ecbs(w1: f64, w2: f64, wh: f64) -> Self {
        PlannerConfig {
            w1,
            w2,
            wh,
            ..Self::base(Variant::Ecbs)
        }
    }

    pub fn xcbs(w1: f64) -> Self {
        PlannerConfig {
            w1,
            use_experience: true,
            ..Self::base(Variant::XCbs)
        }
    }

    pub fn xecbs(w1: f64, w2: f64, wh: f64) -> Self {
        PlannerConfig {
            w1,
            w2,
            wh,
            use_experience: true,
            termination: Termination::PathAware,
            ..Self::base(Variant::XEcbs)
        }
    }

    pub fn prioritized(w1: f64) -> Self {
        PlannerConfig {
            w1,
            ..Self::base(Variant::Prioritized)
        }
    }

    pub fn coupled_oracle() -> Self {
        Self::base(Variant::CoupledOracle)
    }

    /// Unit weights for `variant`, with experience enabled for the
    /// experience-accelerated variants.
    pub fn for_variant(variant: Variant) -> Self {
        match variant {
            Variant::XCbs => Self::xcbs(1.0),
            Variant::XEcbs => Self::xecbs(1.0, 1.0, 1.0),
            v => Self::base(v),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = Some(timeout);
        self
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_cache(mut self, use_cache: bool) -> Self {
        self.use_cache = use_cache;
        self
    }

    pub fn with_termination(mut self, termination: Termination) -> Self {
        self.termination = termination;
        self
    }

    pub fn with_experience_source(mut self, source: ExperienceSource) -> Self {
        self.experience_source = source;
        self
    }

    pub fn with_order(mut self, order: Vec<AgentId>) -> Self {
        self.order = Some(order);
        self
    }

    pub fn with_replan_records(mut self) -> Self {
        self.record_replans = true;
        self
    }

    /// Guaranteed ratio between returned and optimal sum of costs.
    pub fn suboptimality_bound(&self) -> f64 {
        match self.variant {
            Variant::Prioritized => f64::INFINITY,
            Variant::CoupledOracle => 1.0,
            _ => self.w1 * self.w2 * self.wh,
        }
    }

    /// Checks weight ranges and the unit factors each variant fixes.
    pub fn validate(&self) -> Result<(), PlanError> {
        for (name, w) in [("w1", self.w1), ("w2", self.w2), ("wH", self.wh)] {
            if !(w.is_finite() && w >= 1.0) {
                return Err(PlanError::InvalidConfig(format!(
                    "{name} must be a finite number >= 1, got {w}"
                )));
            }
        }
        let unit = |name: &str, w: f64| {
            if w == 1.0 {
                Ok(())
            } else {
                Err(PlanError::InvalidConfig(format!(
                    "{} requires {name} = 1, got {w}",
                    self.variant
                )))
            }
        };
        match self.variant {
            Variant::Cbs => {
                unit("w1", self.w1)?;
                unit("w2", self.w2)?;
                unit("wH", self.wh)?;
            }
            Variant::Bcbs => unit("w1", self.w1)?,
            Variant::XCbs | Variant::Prioritized => {
                unit("w2", self.w2)?;
                unit("wH", self.wh)?;
            }
            Variant::Ecbs | Variant::XEcbs => {}
            Variant::CoupledOracle => {
                unit("w1", self.w1)?;
                unit("w2", self.w2)?;
                unit("wH", self.wh)?;
            }
        }
        let wants = matches!(self.variant, Variant::XCbs | Variant::XEcbs);
        if self.use_experience != wants {
            return Err(PlanError::InvalidConfig(format!(
                "{} {} experience reuse",
                self.variant,
                if wants { "requires" } else { "does not support" }
            )));
        }
        if self.timeout.is_some_and(|t| t.is_zero()) {
            return Err(PlanError::InvalidConfig("timeout must be positive".into()));
        }
        Ok(())
    }

    /// Low-level parameters used for every single-agent search.
    pub fn low_level_params(&self, deadline: Option<Instant>) -> LowLevelParams {
        let focal = match self.variant {
            Variant::Bcbs | Variant::Ecbs | Variant::XEcbs => FocalMode::Conflicts,
            _ => FocalMode::Off,
        };
        LowLevelParams {
            w1: self.w1,
            w2: if focal == FocalMode::Off { 1.0 } else { self.w2 },
            focal,
            horizon: self.horizon,
            termination: self.termination,
            deadline,
            record_trace: false,
        }
    }
}

/// Planner settings used in the experiments, all with a 60 s budget.
pub fn default_benchmark_params() -> Vec<PlannerConfig> {
    let timeout = Duration::from_secs(60);
    vec![
        PlannerConfig::cbs().with_timeout(timeout),
        PlannerConfig::xcbs(50.0).with_timeout(timeout),
        PlannerConfig::ecbs(50.0, 1.3, 1.3).with_timeout(timeout),
        PlannerConfig::xecbs(50.0, 1.3, 1.3).with_timeout(timeout),
        PlannerConfig::prioritized(50.0).with_timeout(timeout),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanStatus {
    Solved,
    /// Search space exhausted within the horizon.
    Infeasible,
    TimedOut,
}

/// Per-query telemetry.
#[derive(Clone, Debug, Default)]
pub struct PlanStats {
    pub ct_expansions: u64,
    pub ct_generated: u64,
    pub ll_calls: u64,
    pub ll_expansions: u64,
    pub ll_generated: u64,
    pub checks: CheckCounters,
    pub wall_time: Duration,
}

impl PlanStats {
    pub fn collision_checks(&self) -> u64 {
        self.checks.collision_checks()
    }
}

/// One constraint-tree child replan, captured with everything needed to
/// rerun the identical single-agent subproblem.
#[derive(Clone, Debug)]
pub struct ReplanRecord {
    pub agent: AgentId,
    pub start: Configuration,
    pub goal: Configuration,
    pub constraints: Vec<Constraint>,
    pub experiences: Vec<Experience>,
    pub soft_paths: Vec<(AgentId, Path)>,
    pub expansions: u64,
    pub cost: Option<Cost>,
}

#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub status: PlanStatus,
    pub solution: Option<Solution>,
    /// Lower bound on the optimal sum of costs at termination: the minimum
    /// CT lower bound in OPEN when the solution was selected.
    pub lower_bound: Option<f64>,
    /// `cost <= bound * lower_bound` holds for a returned solution.
    pub bound: f64,
    pub stats: PlanStats,
    /// Minimum CT lower bound at each high-level selection.
    pub lb_trace: Vec<f64>,
    pub replans: Vec<ReplanRecord>,
}

impl PlanOutcome {
    pub fn is_solved(&self) -> bool {
        self.status == PlanStatus::Solved
    }

    pub fn cost(&self) -> Option<Cost> {
        self.solution.as_ref().map(|s| s.sum_of_costs)
    }
}

/// Shared input checks: counts, endpoint validity.
pub(crate) fn check_instance<D: Domain + ?Sized>(
    checker: &CollisionChecker<'_, D>,
    starts: &[Configuration],
    goals: &[Configuration],
) -> Result<(), PlanError> {
    if starts.len() != goals.len() {
        return Err(PlanError::AgentCountMismatch {
            starts: starts.len(),
            goals: goals.len(),
        });
    }
    if let Some(n) = checker.domain().agent_count() {
        if n != starts.len() {
            return Err(PlanError::InvalidConfig(format!(
                "domain describes {n} agents, got {}",
                starts.len()
            )));
        }
    }
    for (agent, (s, g)) in starts.iter().zip(goals).enumerate() {
        for (what, q) in [("start", s), ("goal", g)] {
            let dim = checker.domain().dimension(agent);
            if q.dim() != dim {
                return Err(PlanError::InvalidEndpoint {
                    agent,
                    reason: format!("{what} {q} has {} coordinates, expected {dim}", q.dim()),
                });
            }
            if !checker.is_state_valid(agent, q) {
                return Err(PlanError::InvalidEndpoint {
                    agent,
                    reason: format!("{what} {q} is out of bounds or in collision"),
                });
            }
        }
    }
    Ok(())
}

/// Plans all agents from `starts` to `goals` with the configured variant.
pub fn plan<D: Domain + ?Sized>(
    domain: &D,
    starts: &[Configuration],
    goals: &[Configuration],
    config: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    config.validate()?;
    let checker = CollisionChecker::new(domain, config.use_cache);
    check_instance(&checker, starts, goals)?;
    match config.variant {
        Variant::Prioritized => {
            let order = config.order.clone().unwrap_or_else(|| (0..starts.len()).collect());
            plan_prioritized(&checker, starts, goals, &order, config)
        }
        Variant::CoupledOracle => plan_coupled_oracle(&checker, starts, goals, config),
        _ => plan_ct(&checker, starts, goals, config),
    }
}
