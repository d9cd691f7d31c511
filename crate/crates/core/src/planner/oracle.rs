use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use ordered_float::OrderedFloat;
use rustc_hash::FxHashMap;

use super::{PlanOutcome, PlanStats, PlanStatus, PlannerConfig};
use crate::domain::{CollisionChecker, Domain};
use crate::error::PlanError;
use crate::model::{Configuration, Cost, PairwiseCollision, Path, Solution, Time};
use crate::search::Horizon;

/// Size guards for the exhaustive composite search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    /// Largest allowed product of per-agent branching factors.
    pub max_branching: u64,
    /// Largest number of composite states stored.
    pub max_states: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_branching: 4096,
            max_states: 4_000_000,
        }
    }
}

type Key = (Vec<Configuration>, u64, Time);

struct Node {
    configs: Vec<Configuration>,
    finished: u64,
    time: Time,
    g: Cost,
    parent: Option<usize>,
}

/// One agent's option for the next step: target configuration, whether it
/// is finished afterwards, and the step cost.
type Move = (Configuration, bool, Cost);

/// Minimum sum-of-costs solution by best-first search over composite timed
/// states.
///
/// A composite state holds every agent's configuration plus the set of
/// agents that have finished, i.e. committed to staying at their goal for
/// good. Finished agents only wait, at no cost; every other agent pays one
/// per step. The heuristic is the sum of the per-agent heuristics of
/// unfinished agents, so the first terminal state popped is optimal.
pub fn plan_coupled_oracle<D: Domain + ?Sized>(
    checker: &CollisionChecker<'_, D>,
    starts: &[Configuration],
    goals: &[Configuration],
    config: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    let n = starts.len();
    if n > 64 {
        return Err(PlanError::OracleGuard(format!("{n} agents, at most 64 supported")));
    }
    let domain = checker.domain();
    let limits = config.oracle_limits;
    let branching = (0..n).try_fold(1u64, |acc, a| acc.checked_mul(domain.max_branching(a) as u64 + 1));
    if branching.is_none_or(|b| b > limits.max_branching) {
        return Err(PlanError::OracleGuard(format!(
            "composite branching exceeds {}",
            limits.max_branching
        )));
    }
    let horizon = match config.horizon {
        Horizon::Fixed(t) => t,
        Horizon::Auto { t_max } => (0..n)
            .map(|a| domain.lattice_size(a).min(t_max as usize) as Time)
            .max()
            .unwrap_or(0),
    };
    let t0 = Instant::now();
    let deadline = config.timeout.map(|d| t0 + d);
    let counters = checker.counters();
    let mut stats = PlanStats::default();

    let all: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let h = |configs: &[Configuration], finished: u64| -> f64 {
        (0..n)
            .filter(|a| finished & (1 << a) == 0)
            .map(|a| domain.heuristic(a, &configs[a], &goals[a]))
            .sum()
    };
    let is_terminal =
        |configs: &[Configuration], finished: u64| (0..n).all(|a| finished & (1 << a) != 0 || configs[a] == goals[a]);

    let mut nodes = vec![Node {
        configs: starts.to_vec(),
        finished: 0,
        time: 0,
        g: 0,
        parent: None,
    }];
    let mut best: FxHashMap<Key, Cost> = FxHashMap::default();
    best.insert((starts.to_vec(), 0, 0), 0);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((OrderedFloat(h(starts, 0)), Reverse(0), 0usize)));

    let pairwise_ok = (0..n).all(|b| (0..b).all(|a| !checker.vertex_collision(a, &starts[a], b, &starts[b])));
    if !pairwise_ok {
        heap.clear();
    }

    let mut options: Vec<Vec<Move>> = vec![Vec::new(); n];
    let mut prims = Vec::new();
    let mut status = PlanStatus::Infeasible;
    let mut goal_node = None;
    while let Some(Reverse((_, Reverse(g), id))) = heap.pop() {
        let (time, finished) = (nodes[id].time, nodes[id].finished);
        let key = (nodes[id].configs.clone(), finished, time);
        if best.get(&key).is_some_and(|&b| b < g) {
            continue;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            status = PlanStatus::TimedOut;
            break;
        }
        stats.ll_expansions += 1;
        if is_terminal(&nodes[id].configs, finished) {
            status = PlanStatus::Solved;
            goal_node = Some(id);
            break;
        }
        if time >= horizon {
            continue;
        }
        for a in 0..n {
            let q = &nodes[id].configs[a];
            let opts = &mut options[a];
            opts.clear();
            if finished & (1 << a) != 0 {
                opts.push((q.clone(), true, 0));
                continue;
            }
            if *q == goals[a] {
                opts.push((q.clone(), true, 0));
            }
            opts.push((q.clone(), false, 1));
            prims.clear();
            domain.motion_primitives(a, q, &mut prims);
            for p in prims.drain(..) {
                if checker.is_state_valid(a, &p) && checker.is_edge_valid(a, q, &p) {
                    opts.push((p, false, 1));
                }
            }
        }
        // depth-first product of the per-agent options with pairwise pruning
        let from = nodes[id].configs.clone();
        let mut choice = vec![0usize; n];
        let mut depth = 0usize;
        loop {
            if choice[depth] == options[depth].len() {
                if depth == 0 {
                    break;
                }
                choice[depth] = 0;
                depth -= 1;
                choice[depth] += 1;
                continue;
            }
            let (qd, _, _) = &options[depth][choice[depth]];
            let clash = (0..depth).any(|b| {
                let (qb, _, _) = &options[b][choice[b]];
                checker.vertex_collision(b, qb, depth, qd)
                    || checker.edge_collision(b, &from[b], qb, depth, &from[depth], qd)
            });
            if clash {
                choice[depth] += 1;
                continue;
            }
            if depth + 1 < n {
                depth += 1;
                continue;
            }
            let mut configs = Vec::with_capacity(n);
            let mut next_finished = 0u64;
            let mut cost = g;
            for (a, opts) in options.iter().enumerate() {
                let (q, fin, c) = &opts[choice[a]];
                configs.push(q.clone());
                if *fin {
                    next_finished |= 1 << a;
                }
                cost += c;
            }
            let key = (configs, next_finished & all, time + 1);
            if best.get(&key).is_none_or(|&b| cost < b) {
                if nodes.len() >= limits.max_states {
                    return Err(PlanError::OracleGuard(format!(
                        "more than {} composite states",
                        limits.max_states
                    )));
                }
                let f = cost as f64 + h(&key.0, key.1);
                let nid = nodes.len();
                nodes.push(Node {
                    configs: key.0.clone(),
                    finished: key.1,
                    time: key.2,
                    g: cost,
                    parent: Some(id),
                });
                best.insert(key, cost);
                heap.push(Reverse((OrderedFloat(f), Reverse(cost), nid)));
            }
            choice[depth] += 1;
        }
    }

    let solution = goal_node.map(|id| {
        let mut chain = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            chain.push(c);
            cur = nodes[c].parent;
        }
        chain.reverse();
        let paths = (0..n)
            .map(|a| Path::new(chain.iter().map(|&c| nodes[c].configs[a].clone()).collect()))
            .collect();
        let s = Solution::new(paths);
        debug_assert_eq!(s.sum_of_costs, nodes[id].g);
        s
    });
    stats.checks = checker.counters().since(&counters);
    stats.wall_time = t0.elapsed();
    let lower_bound = solution.as_ref().map(|s| s.sum_of_costs as f64);
    Ok(PlanOutcome {
        status,
        solution,
        lower_bound,
        bound: 1.0,
        stats,
        lb_trace: Vec::new(),
        replans: Vec::new(),
    })
}
