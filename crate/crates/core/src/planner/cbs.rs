use std::collections::BTreeSet;
use std::time::Instant;

use ordered_float::OrderedFloat;
use rustc_hash::FxHashSet;

use super::{ExperienceSource, PlanOutcome, PlanStats, PlanStatus, PlannerConfig, ReplanRecord, Variant};
use crate::domain::{CollisionChecker, Domain};
use crate::error::PlanError;
use crate::model::{
    conflict_to_constraints, conflicts_involving, detect_conflicts, strip_time, AgentId, Configuration, Conflict,
    Constraint, Cost, Experience, PairwiseCollision, Path, Solution,
};
use crate::search::{solve, AgentConstraints, FocalMode, FocalQueue, LowLevelQuery, LowLevelResult, Termination};

#[derive(Clone, Debug)]
struct CtNode {
    parent: Option<usize>,
    constraint: Option<Constraint>,
    paths: Vec<Path>,
    lbs: Vec<f64>,
    cost: Cost,
    lb: f64,
    conflicts: Vec<Conflict>,
}

/// High-level OPEN with the variant's selection rule.
///
/// CBS/xCBS pop the cheapest node. BCBS keeps FOCAL over cost within `wH`
/// of the cheapest; ECBS/xECBS order OPEN by the lower bound and keep FOCAL
/// over cost within `wH` of the smallest lower bound. FOCAL is ordered by
/// conflict count, then cost, then creation order. An empty FOCAL falls back
/// to the OPEN head.
pub struct CtQueue {
    queue: FocalQueue<(Cost, usize), (usize, Cost, usize)>,
    by_lb: BTreeSet<(OrderedFloat<f64>, usize)>,
    lbs: Vec<f64>,
    uses_lb: bool,
}

impl CtQueue {
    pub fn new(variant: Variant, wh: f64) -> Self {
        CtQueue {
            queue: FocalQueue::new(wh, variant.high_level_focal()),
            by_lb: BTreeSet::new(),
            lbs: Vec::new(),
            uses_lb: variant.uses_lower_bound(),
        }
    }

    /// Queues node `id`; ids must be dense creation indices.
    pub fn push(&mut self, id: usize, cost: Cost, lb: f64, conflicts: usize) {
        let f1 = if self.uses_lb { lb } else { cost as f64 };
        self.queue
            .insert(id, f1, cost as f64, (cost, id), (conflicts, cost, id));
        if self.lbs.len() <= id {
            self.lbs.resize(id + 1, 0.0);
        }
        self.lbs[id] = lb;
        self.by_lb.insert((OrderedFloat(lb), id));
    }

    pub fn pop(&mut self) -> Option<usize> {
        let id = self.queue.pop()?;
        self.by_lb.remove(&(OrderedFloat(self.lbs[id]), id));
        Some(id)
    }

    pub fn min_lb(&self) -> Option<f64> {
        self.by_lb.first().map(|(lb, _)| lb.0)
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

struct CtSearch<'a, 'd, D: Domain + ?Sized> {
    checker: &'a CollisionChecker<'d, D>,
    starts: &'a [Configuration],
    goals: &'a [Configuration],
    config: &'a PlannerConfig,
    params: crate::search::LowLevelParams,
    nodes: Vec<CtNode>,
    /// Distinct paths generated per agent, in generation order.
    registry: Vec<(Vec<Path>, FxHashSet<Path>)>,
    stats: PlanStats,
    replans: Vec<ReplanRecord>,
    soft_needed: bool,
}

enum Replan {
    Path(Path, f64),
    Infeasible,
    TimedOut,
}

impl<D: Domain + ?Sized> CtSearch<'_, '_, D> {
    fn record(&mut self, r: &LowLevelResult) {
        self.stats.ll_calls += 1;
        self.stats.ll_expansions += r.expansions;
        self.stats.ll_generated += r.generated;
    }

    fn register(&mut self, agent: AgentId, path: &Path) {
        let (list, seen) = &mut self.registry[agent];
        if seen.insert(path.clone()) {
            list.push(path.clone());
        }
    }

    fn constraints_for(&self, node: usize, agent: AgentId) -> Vec<Constraint> {
        let mut out = Vec::new();
        let mut cur = Some(node);
        while let Some(id) = cur {
            let n = &self.nodes[id];
            if let Some(c) = n.constraint.as_ref().filter(|c| c.agent == agent) {
                out.push(c.clone());
            }
            cur = n.parent;
        }
        out
    }

    fn experiences_for(&self, node: usize, agent: AgentId) -> Vec<Experience> {
        if !self.config.use_experience {
            return Vec::new();
        }
        let parent_path = &self.nodes[node].paths[agent];
        match self.config.experience_source {
            ExperienceSource::ParentPath => vec![strip_time(parent_path)],
            ExperienceSource::BranchPaths => {
                let mut seen = FxHashSet::default();
                let mut out = Vec::new();
                let mut cur = Some(node);
                while let Some(id) = cur {
                    let p = &self.nodes[id].paths[agent];
                    if seen.insert(p) {
                        out.push(strip_time(p));
                    }
                    cur = self.nodes[id].parent;
                }
                out
            }
            ExperienceSource::AllCtPaths => std::iter::once(parent_path)
                .chain(self.registry[agent].0.iter().filter(|p| *p != parent_path))
                .map(strip_time)
                .collect(),
        }
    }

    fn replan(&mut self, node: usize, c: Constraint) -> Result<Replan, PlanError> {
        let agent = c.agent;
        let mut constraints = self.constraints_for(node, agent);
        constraints.push(c);
        let ac = AgentConstraints::for_agent(agent, &constraints);
        let experiences = self.experiences_for(node, agent);
        let parent = &self.nodes[node];
        let soft: Vec<(AgentId, &Path)> = if self.soft_needed {
            parent.paths.iter().enumerate().filter(|(j, _)| *j != agent).collect()
        } else {
            Vec::new()
        };
        let query = LowLevelQuery::new(agent, &self.starts[agent], &self.goals[agent])
            .with_constraints(&ac)
            .with_experiences(&experiences)
            .with_soft_paths(&soft);
        let r = solve(self.checker, query, &self.params)?;
        let record = self.config.record_replans.then(|| ReplanRecord {
            agent,
            start: self.starts[agent].clone(),
            goal: self.goals[agent].clone(),
            constraints: constraints.clone(),
            experiences: experiences.clone(),
            soft_paths: soft.iter().map(|(j, p)| (*j, (*p).clone())).collect(),
            expansions: r.expansions,
            cost: r.cost(),
        });
        self.record(&r);
        self.replans.extend(record);
        Ok(match r.path {
            Some(p) => Replan::Path(p, r.lower_bound),
            None if r.timed_out => Replan::TimedOut,
            None => Replan::Infeasible,
        })
    }

    /// Builds the root node; `None` if some agent has no path.
    fn root(&mut self) -> Result<Result<CtNode, PlanStatus>, PlanError> {
        let n = self.starts.len();
        let mut paths: Vec<Path> = Vec::with_capacity(n);
        let mut lbs = Vec::with_capacity(n);
        for agent in 0..n {
            let soft: Vec<(AgentId, &Path)> = if self.params.focal == FocalMode::Conflicts {
                paths.iter().enumerate().collect()
            } else {
                Vec::new()
            };
            let query = LowLevelQuery::new(agent, &self.starts[agent], &self.goals[agent]).with_soft_paths(&soft);
            let r = solve(self.checker, query, &self.params)?;
            self.record(&r);
            match r.path {
                Some(p) => {
                    lbs.push(r.lower_bound);
                    paths.push(p);
                }
                None if r.timed_out => return Ok(Err(PlanStatus::TimedOut)),
                None => return Ok(Err(PlanStatus::Infeasible)),
            }
        }
        let conflicts = detect_conflicts(&paths, self.checker);
        Ok(Ok(CtNode {
            parent: None,
            constraint: None,
            cost: paths.iter().map(Path::cost).sum(),
            lb: lbs.iter().sum(),
            paths,
            lbs,
            conflicts,
        }))
    }

    fn child(&self, parent: usize, c: Constraint, path: Path, lb: f64) -> CtNode {
        let p = &self.nodes[parent];
        let agent = c.agent;
        let mut paths = p.paths.clone();
        paths[agent] = path;
        let mut lbs = p.lbs.clone();
        // never below the parent's bound, which keeps min LB monotone
        lbs[agent] = lb.max(p.lbs[agent]);
        let conflicts = update_conflicts(&p.conflicts, &paths, agent, self.checker);
        CtNode {
            parent: Some(parent),
            constraint: Some(c),
            cost: paths.iter().map(Path::cost).sum(),
            lb: lbs.iter().sum(),
            paths,
            lbs,
            conflicts,
        }
    }
}

/// Conflicts of `paths` given the conflicts before `agent`'s path changed:
/// only pairs involving `agent` are recomputed.
fn update_conflicts<C: PairwiseCollision + ?Sized>(
    previous: &[Conflict],
    paths: &[Path],
    agent: AgentId,
    checker: &C,
) -> Vec<Conflict> {
    let mut conflicts: Vec<Conflict> = previous.iter().filter(|k| !k.involves(agent)).cloned().collect();
    conflicts.extend(conflicts_involving(paths, agent, checker));
    conflicts.sort();
    conflicts
}

/// Constraint-tree search for the CBS, BCBS, ECBS, xCBS and xECBS variants.
pub fn plan_ct<D: Domain + ?Sized>(
    checker: &CollisionChecker<'_, D>,
    starts: &[Configuration],
    goals: &[Configuration],
    config: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    let t0 = Instant::now();
    let deadline = config.timeout.map(|d| t0 + d);
    let counters = checker.counters();
    let params = config.low_level_params(deadline);
    let soft_needed =
        params.focal == FocalMode::Conflicts || (config.use_experience && config.termination == Termination::PathAware);
    let mut search = CtSearch {
        checker,
        starts,
        goals,
        config,
        params,
        nodes: Vec::new(),
        registry: vec![Default::default(); starts.len()],
        stats: PlanStats::default(),
        replans: Vec::new(),
        soft_needed,
    };
    let bound = config.suboptimality_bound();
    let finish = |mut search: CtSearch<'_, '_, D>, status, solution, lower_bound, lb_trace| {
        search.stats.checks = checker.counters().since(&counters);
        search.stats.wall_time = t0.elapsed();
        Ok(PlanOutcome {
            status,
            solution,
            lower_bound,
            bound,
            stats: search.stats,
            lb_trace,
            replans: search.replans,
        })
    };

    let root = match search.root()? {
        Ok(root) => root,
        Err(status) => return finish(search, status, None, None, Vec::new()),
    };
    for (agent, p) in root.paths.iter().enumerate() {
        search.register(agent, p);
    }
    let mut queue = CtQueue::new(config.variant, config.wh);
    queue.push(0, root.cost, root.lb, root.conflicts.len());
    search.nodes.push(root);
    search.stats.ct_generated = 1;
    let mut lb_trace = Vec::new();

    loop {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return finish(search, PlanStatus::TimedOut, None, None, lb_trace);
        }
        let Some(min_lb) = queue.min_lb() else {
            return finish(search, PlanStatus::Infeasible, None, None, lb_trace);
        };
        let id = queue.pop().expect("non-empty");
        lb_trace.push(min_lb);
        search.stats.ct_expansions += 1;
        let Some(conflict) = search.nodes[id].conflicts.first().cloned() else {
            let solution = Solution::new(search.nodes[id].paths.clone());
            return finish(search, PlanStatus::Solved, Some(solution), Some(min_lb), lb_trace);
        };
        for c in conflict_to_constraints(&conflict) {
            let agent = c.agent;
            match search.replan(id, c.clone())? {
                Replan::Path(path, lb) => {
                    search.register(agent, &path);
                    let child = search.child(id, c, path, lb);
                    let cid = search.nodes.len();
                    queue.push(cid, child.cost, child.lb, child.conflicts.len());
                    search.nodes.push(child);
                    search.stats.ct_generated += 1;
                }
                Replan::Infeasible => {}
                Replan::TimedOut => return finish(search, PlanStatus::TimedOut, None, None, lb_trace),
            }
        }
    }
}
