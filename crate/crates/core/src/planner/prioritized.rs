use std::time::Instant;

use super::{PlanOutcome, PlanStats, PlanStatus, PlannerConfig};
use crate::domain::{CollisionChecker, Domain};
use crate::error::PlanError;
use crate::model::{AgentId, Configuration, Path, Solution};
use crate::search::{solve, LowLevelQuery};

/// Plans agents one at a time in `order`; each treats the paths of the agents
/// before it as moving obstacles. Incomplete: fails as soon as one agent
/// has no path.
pub fn plan_prioritized<D: Domain + ?Sized>(
    checker: &CollisionChecker<'_, D>,
    starts: &[Configuration],
    goals: &[Configuration],
    order: &[AgentId],
    config: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    let n = starts.len();
    let mut seen = vec![false; n];
    if order.len() != n || !order.iter().all(|&a| a < n && !std::mem::replace(&mut seen[a], true)) {
        return Err(PlanError::InvalidOrder);
    }
    let t0 = Instant::now();
    let counters = checker.counters();
    let params = config.low_level_params(config.timeout.map(|d| t0 + d));
    let mut stats = PlanStats::default();
    let mut planned: Vec<Option<Path>> = vec![None; n];
    let mut status = PlanStatus::Solved;
    for &agent in order {
        let hard: Vec<(AgentId, &Path)> = planned
            .iter()
            .enumerate()
            .filter_map(|(j, p)| p.as_ref().map(|p| (j, p)))
            .collect();
        let query = LowLevelQuery::new(agent, &starts[agent], &goals[agent]).with_hard_paths(&hard);
        let r = solve(checker, query, &params)?;
        stats.ll_calls += 1;
        stats.ll_expansions += r.expansions;
        stats.ll_generated += r.generated;
        match r.path {
            Some(p) => planned[agent] = Some(p),
            None => {
                status = if r.timed_out {
                    PlanStatus::TimedOut
                } else {
                    PlanStatus::Infeasible
                };
                break;
            }
        }
    }
    stats.checks = checker.counters().since(&counters);
    stats.wall_time = t0.elapsed();
    let solution =
        (status == PlanStatus::Solved).then(|| Solution::new(planned.into_iter().map(Option::unwrap).collect()));
    Ok(PlanOutcome {
        status,
        solution,
        lower_bound: None,
        bound: config.suboptimality_bound(),
        stats,
        lb_trace: Vec::new(),
        replans: Vec::new(),
    })
}
