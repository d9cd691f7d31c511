//! Experience-accelerated weighted A* / focal search over timed states.

use std::cmp::Reverse;
use std::time::Instant;

use ordered_float::OrderedFloat;
use rustc_hash::FxHashMap;

use super::constraints::AgentConstraints;
use super::focal::FocalQueue;
use crate::domain::{CheckCounters, CollisionChecker, Domain};
use crate::error::PlanError;
use crate::model::{AgentId, Configuration, Cost, Experience, PairwiseCollision, Path, Time, TimedState};

pub type NodeId = usize;

/// Every primitive and every wait takes one timestep.
pub const STEP_COST: Cost = 1;

/// Secondary FOCAL priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FocalMode {
    /// `f2 = f1`: no focal list, plain weighted A* on OPEN.
    Off,
    /// Fewer collisions against the other agents' paths first.
    Conflicts,
}

/// When an experience walk stops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// At the first constraint or static validity violation.
    Simple,
    /// Additionally at the first step that collides with another agent's
    /// current path.
    PathAware,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    /// Absolute last timestep a state may have.
    Fixed(Time),
    /// Latest constraint (or hard obstacle path) time plus the lattice size
    /// capped at `t_max`.
    Auto { t_max: Time },
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon::Auto { t_max: 128 }
    }
}

#[derive(Clone, Debug)]
pub struct LowLevelParams {
    /// Heuristic inflation, `>= 1`.
    pub w1: f64,
    /// Focal sub-optimality factor, `>= 1`. Ignored when `focal` is `Off`.
    pub w2: f64,
    pub focal: FocalMode,
    pub horizon: Horizon,
    pub termination: Termination,
    pub deadline: Option<Instant>,
    /// Record every expanded state in order.
    pub record_trace: bool,
}

impl Default for LowLevelParams {
    fn default() -> Self {
        LowLevelParams {
            w1: 1.0,
            w2: 1.0,
            focal: FocalMode::Off,
            horizon: Horizon::default(),
            termination: Termination::Simple,
            deadline: None,
            record_trace: false,
        }
    }
}

impl LowLevelParams {
    pub fn weighted(w1: f64) -> Self {
        LowLevelParams {
            w1,
            ..Default::default()
        }
    }

    pub fn focal(w1: f64, w2: f64) -> Self {
        LowLevelParams {
            w1,
            w2,
            focal: FocalMode::Conflicts,
            ..Default::default()
        }
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_termination(mut self, termination: Termination) -> Self {
        self.termination = termination;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    /// Sub-optimality factor of the returned path relative to the optimum
    /// under the same constraints.
    pub fn bound(&self) -> f64 {
        match self.focal {
            FocalMode::Off => self.w1,
            FocalMode::Conflicts => self.w1 * self.w2,
        }
    }
}

/// One single-agent planning request.
#[derive(Clone, Copy)]
pub struct LowLevelQuery<'a> {
    pub agent: AgentId,
    pub start: &'a Configuration,
    pub goal: &'a Configuration,
    pub constraints: Option<&'a AgentConstraints>,
    pub experiences: &'a [Experience],
    /// Other agents' current paths: counted for FOCAL and checked by the
    /// path-aware experience termination, never forbidden.
    pub soft_paths: &'a [(AgentId, &'a Path)],
    /// Moving obstacles that must not be touched (prioritized planning).
    pub hard_paths: &'a [(AgentId, &'a Path)],
}

impl<'a> LowLevelQuery<'a> {
    pub fn new(agent: AgentId, start: &'a Configuration, goal: &'a Configuration) -> Self {
        LowLevelQuery {
            agent,
            start,
            goal,
            constraints: None,
            experiences: &[],
            soft_paths: &[],
            hard_paths: &[],
        }
    }

    pub fn with_constraints(mut self, constraints: &'a AgentConstraints) -> Self {
        self.constraints = Some(constraints);
        self
    }

    pub fn with_experiences(mut self, experiences: &'a [Experience]) -> Self {
        self.experiences = experiences;
        self
    }

    pub fn with_soft_paths(mut self, paths: &'a [(AgentId, &'a Path)]) -> Self {
        self.soft_paths = paths;
        self
    }

    pub fn with_hard_paths(mut self, paths: &'a [(AgentId, &'a Path)]) -> Self {
        self.hard_paths = paths;
        self
    }
}

#[derive(Clone, Debug)]
pub struct LowLevelResult {
    /// `None` when OPEN exhausted within the horizon or the deadline passed.
    pub path: Option<Path>,
    /// `min` of the uninflated `g + h` over OPEN and the extracted goal;
    /// infinite on failure.
    pub lower_bound: f64,
    pub expansions: u64,
    pub generated: u64,
    /// Checker counter deltas for this call.
    pub checks: CheckCounters,
    pub timed_out: bool,
    /// Collisions of the returned path against the soft paths, as counted
    /// during search.
    pub conflicts: u32,
    pub trace: Vec<TimedState>,
}

impl LowLevelResult {
    pub fn cost(&self) -> Option<Cost> {
        self.path.as_ref().map(Path::cost)
    }
}

#[derive(Clone, Debug)]
pub struct SearchNode {
    pub state: TimedState,
    pub g: Cost,
    pub h: f64,
    pub parent: Option<NodeId>,
    pub conflicts: u32,
    pub closed: bool,
}

type OpenKey = (Reverse<Cost>, TimedState);
type FocalKey = (u32, OrderedFloat<f64>, TimedState);

/// Earliest index of each configuration in an experience.
fn index_experience(exp: &Experience) -> FxHashMap<Configuration, usize> {
    let mut idx = FxHashMap::default();
    for (k, q) in exp.configs().iter().enumerate() {
        idx.entry(q.clone()).or_insert(k);
    }
    idx
}

/// Configurations strictly after the earliest occurrence of `q`; empty when
/// `q` is absent or last.
pub fn suffix<'e>(experience: &'e Experience, q: &Configuration) -> &'e [Configuration] {
    match experience.position(q) {
        Some(k) => &experience.configs()[k + 1..],
        None => &[],
    }
}

/// Cost-to-go estimate in timestep units.
pub fn heuristic<D: Domain + ?Sized>(domain: &D, agent: AgentId, q: &Configuration, goal: &Configuration) -> f64 {
    domain.heuristic(agent, q, goal)
}

/// A single xWA* search. Exposed for step-level testing; most callers use
/// [`solve`].
pub struct XwaStar<'a, 'd, D: Domain + ?Sized> {
    checker: &'a CollisionChecker<'d, D>,
    query: LowLevelQuery<'a>,
    params: &'a LowLevelParams,
    horizon: Time,
    nodes: Vec<SearchNode>,
    index: FxHashMap<TimedState, NodeId>,
    queue: FocalQueue<OpenKey, FocalKey>,
    experience_index: Vec<FxHashMap<Configuration, usize>>,
    counts_conflicts: bool,
    expansions: u64,
    generated: u64,
    trace: Vec<TimedState>,
    scratch: Vec<Configuration>,
    start_counters: CheckCounters,
}

impl<'a, 'd, D: Domain + ?Sized> XwaStar<'a, 'd, D> {
    pub fn new(
        checker: &'a CollisionChecker<'d, D>,
        query: LowLevelQuery<'a>,
        params: &'a LowLevelParams,
    ) -> Result<Self, PlanError> {
        if !(params.w1 >= 1.0 && params.w2 >= 1.0) {
            return Err(PlanError::InvalidConfig(format!(
                "low-level weights must be >= 1 (w1 = {}, w2 = {})",
                params.w1, params.w2
            )));
        }
        let agent = query.agent;
        for (what, q) in [("start", query.start), ("goal", query.goal)] {
            if !checker.is_state_valid(agent, q) {
                return Err(PlanError::InvalidEndpoint {
                    agent,
                    reason: format!("{what} {q} is out of bounds or in collision"),
                });
            }
        }
        let domain = checker.domain();
        let horizon = match params.horizon {
            Horizon::Fixed(t) => t,
            Horizon::Auto { t_max } => {
                let latest = query
                    .constraints
                    .and_then(AgentConstraints::latest_time)
                    .map_or(0, |t| t + 1);
                let obstacles = query.hard_paths.iter().map(|(_, p)| p.len() as Time).max().unwrap_or(0);
                let span = (domain.lattice_size(agent).min(t_max as usize) as Time).max(1);
                latest.max(obstacles) + span
            }
        };
        let counts_conflicts = params.focal == FocalMode::Conflicts && !query.soft_paths.is_empty();
        let mut search = XwaStar {
            checker,
            query,
            params,
            horizon,
            nodes: Vec::new(),
            index: FxHashMap::default(),
            queue: FocalQueue::new(params.w2, params.focal == FocalMode::Conflicts),
            experience_index: query.experiences.iter().map(index_experience).collect(),
            counts_conflicts,
            expansions: 0,
            generated: 0,
            trace: Vec::new(),
            scratch: Vec::new(),
            start_counters: checker.counters(),
        };
        let root = TimedState::new(query.start.clone(), 0);
        let forbidden = query.constraints.is_some_and(|c| c.forbids_vertex(&root.config, 0))
            || query
                .hard_paths
                .iter()
                .any(|(j, p)| checker.vertex_collision(agent, &root.config, *j, p.at(0)));
        if !forbidden {
            let conflicts = if counts_conflicts {
                search.vertex_conflicts(&root)
            } else {
                0
            };
            search.add_node(root, 0, None, conflicts);
        }
        Ok(search)
    }

    pub fn horizon(&self) -> Time {
        self.horizon
    }

    pub fn nodes(&self) -> &[SearchNode] {
        &self.nodes
    }

    pub fn node_of(&self, state: &TimedState) -> Option<&SearchNode> {
        self.index.get(state).map(|&id| &self.nodes[id])
    }

    pub fn node_id(&self, state: &TimedState) -> Option<NodeId> {
        self.index.get(state).copied()
    }

    pub fn open_len(&self) -> usize {
        self.queue.len()
    }

    pub fn in_open(&self, id: NodeId) -> bool {
        self.queue.contains(id)
    }

    fn f1(&self, g: Cost, h: f64) -> f64 {
        g as f64 + self.params.w1 * h
    }

    fn enqueue(&mut self, id: NodeId) {
        let n = &self.nodes[id];
        let f1 = self.f1(n.g, n.h);
        let open_key = (Reverse(n.g), n.state.clone());
        let focal_key = (n.conflicts, OrderedFloat(f1), n.state.clone());
        self.queue.insert(id, f1, f1, open_key, focal_key);
    }

    fn add_node(&mut self, state: TimedState, g: Cost, parent: Option<NodeId>, conflicts: u32) -> NodeId {
        let h = self
            .checker
            .domain()
            .heuristic(self.query.agent, &state.config, self.query.goal);
        let id = self.nodes.len();
        self.index.insert(state.clone(), id);
        self.nodes.push(SearchNode {
            state,
            g,
            h,
            parent,
            conflicts,
            closed: false,
        });
        self.generated += 1;
        self.enqueue(id);
        id
    }

    fn vertex_conflicts(&self, s: &TimedState) -> u32 {
        let agent = self.query.agent;
        self.query
            .soft_paths
            .iter()
            .filter(|(j, p)| self.checker.vertex_collision(agent, &s.config, *j, p.at(s.time)))
            .count() as u32
    }

    /// Collisions of the step `from -> to` (arriving at `to.time`) against
    /// the soft paths.
    fn step_conflicts(&self, from: &Configuration, to: &TimedState) -> u32 {
        let agent = self.query.agent;
        let t0 = to.time - 1;
        let mut n = 0;
        for (j, p) in self.query.soft_paths {
            if self.checker.vertex_collision(agent, &to.config, *j, p.at(to.time)) {
                n += 1;
            }
            if self
                .checker
                .edge_collision(agent, from, &to.config, *j, p.at(t0), p.at(to.time))
            {
                n += 1;
            }
        }
        n
    }

    fn hits_hard_paths(&self, from: &Configuration, to: &TimedState) -> bool {
        let agent = self.query.agent;
        let t0 = to.time - 1;
        self.query.hard_paths.iter().any(|(j, p)| {
            self.checker.vertex_collision(agent, &to.config, *j, p.at(to.time))
                || self
                    .checker
                    .edge_collision(agent, from, &to.config, *j, p.at(t0), p.at(to.time))
        })
    }

    fn is_primitive(&mut self, from: &Configuration, to: &Configuration) -> bool {
        if from == to {
            return true;
        }
        self.scratch.clear();
        let mut scratch = std::mem::take(&mut self.scratch);
        self.checker
            .domain()
            .motion_primitives(self.query.agent, from, &mut scratch);
        let found = scratch.iter().any(|q| q == to);
        self.scratch = scratch;
        found
    }

    /// Constraint, static and hard-obstacle validity of `from -> to`.
    fn transition_valid(&self, from: &Configuration, to: &TimedState) -> bool {
        if to.time > self.horizon {
            return false;
        }
        if let Some(c) = self.query.constraints {
            if c.forbids_vertex(&to.config, to.time) || c.forbids_edge(from, &to.config, to.time - 1) {
                return false;
            }
        }
        let agent = self.query.agent;
        self.checker.is_state_valid(agent, &to.config)
            && self.checker.is_edge_valid(agent, from, &to.config)
            && !self.hits_hard_paths(from, to)
    }

    /// All primitives plus wait from `s`, filtered by validity and
    /// constraints at the successor time.
    pub fn successors(&mut self, s: &TimedState) -> Vec<(TimedState, Cost)> {
        let mut cands = std::mem::take(&mut self.scratch);
        cands.clear();
        self.checker
            .domain()
            .motion_primitives(self.query.agent, &s.config, &mut cands);
        cands.push(s.config.clone());
        let out = cands
            .iter()
            .map(|q| TimedState::new(q.clone(), s.time + 1))
            .filter(|next| self.transition_valid(&s.config, next))
            .map(|next| (next, STEP_COST))
            .collect();
        self.scratch = cands;
        out
    }

    /// Relaxes `s2` through `s1`. Returns whether `s2` was inserted or
    /// improved.
    pub fn try_insert_or_update(&mut self, s1: NodeId, s2: TimedState, cost: Cost) -> bool {
        let g_new = self.nodes[s1].g + cost;
        match self.index.get(&s2).copied() {
            None => {
                let conflicts = if self.counts_conflicts {
                    self.nodes[s1].conflicts + self.step_conflicts(&self.nodes[s1].state.config, &s2)
                } else {
                    0
                };
                self.add_node(s2, g_new, Some(s1), conflicts);
                true
            }
            Some(id) if self.nodes[id].g > g_new => {
                let conflicts = if self.counts_conflicts {
                    self.nodes[s1].conflicts + self.step_conflicts(&self.nodes[s1].state.config, &s2)
                } else {
                    0
                };
                let n = &mut self.nodes[id];
                n.g = g_new;
                n.parent = Some(s1);
                n.conflicts = conflicts;
                // reopened if it was closed
                n.closed = false;
                self.enqueue(id);
                true
            }
            Some(_) => false,
        }
    }

    /// Walks experience `e` from the configuration of node `s`, inserting
    /// each following state one timestep later until the termination
    /// condition fires. No-op if `s` is not on the experience.
    pub fn push_partial_experience(&mut self, e: usize, s: NodeId) {
        let Some(&pos) = self.experience_index[e].get(&self.nodes[s].state.config) else {
            return;
        };
        let experience = &self.query.experiences[e];
        let mut cur = s;
        for q in &experience.configs()[pos + 1..] {
            let from = self.nodes[cur].state.clone();
            let next = TimedState::new(q.clone(), from.time + 1);
            if !self.is_primitive(&from.config, q) || !self.transition_valid(&from.config, &next) {
                break;
            }
            if self.params.termination == Termination::PathAware
                && !self.query.soft_paths.is_empty()
                && self.step_conflicts(&from.config, &next) > 0
            {
                break;
            }
            self.try_insert_or_update(cur, next.clone(), STEP_COST);
            cur = self.index[&next];
        }
    }

    fn push_experiences(&mut self, s: NodeId) {
        for e in 0..self.experience_index.len() {
            if self.experience_index[e].contains_key(&self.nodes[s].state.config) {
                self.push_partial_experience(e, s);
            }
        }
    }

    fn is_goal(&self, s: &TimedState) -> bool {
        if &s.config != self.query.goal {
            return false;
        }
        if let Some(c) = self.query.constraints {
            if c.blocks_parking(&s.config, s.time) {
                return false;
            }
        }
        // parked at the goal from `s.time` on, clear of every hard path
        let agent = self.query.agent;
        self.query.hard_paths.iter().all(|(j, p)| {
            let end = (p.len() as Time).max(s.time + 1);
            (s.time..end).all(|t| {
                !self.checker.vertex_collision(agent, &s.config, *j, p.at(t))
                    && (t + 1 >= end
                        || !self
                            .checker
                            .edge_collision(agent, &s.config, &s.config, *j, p.at(t), p.at(t + 1)))
            })
        })
    }

    fn extract_path(&self, goal: NodeId) -> Path {
        let mut waypoints = Vec::new();
        let mut cur = Some(goal);
        while let Some(id) = cur {
            waypoints.push(self.nodes[id].state.config.clone());
            cur = self.nodes[id].parent;
        }
        waypoints.reverse();
        Path::new(waypoints)
    }

    fn finish(&mut self, path: Option<Path>, lower_bound: f64, timed_out: bool, conflicts: u32) -> LowLevelResult {
        LowLevelResult {
            path,
            lower_bound,
            expansions: self.expansions,
            generated: self.generated,
            checks: self.checker.counters().since(&self.start_counters),
            timed_out,
            conflicts,
            trace: std::mem::take(&mut self.trace),
        }
    }

    /// Runs the search to completion.
    pub fn run(mut self) -> LowLevelResult {
        if !self.experience_index.is_empty() && !self.nodes.is_empty() {
            self.push_experiences(0);
        }
        while let Some(id) = self.queue.pop() {
            if self.expansions % 64 == 0 {
                if let Some(deadline) = self.params.deadline {
                    if Instant::now() >= deadline {
                        return self.finish(None, f64::INFINITY, true, 0);
                    }
                }
            }
            self.nodes[id].closed = true;
            self.expansions += 1;
            let state = self.nodes[id].state.clone();
            if self.params.record_trace {
                self.trace.push(state.clone());
            }
            if self.is_goal(&state) {
                let goal_f = self.nodes[id].g as f64 + self.nodes[id].h;
                let lb = self
                    .queue
                    .ids()
                    .map(|n| self.nodes[n].g as f64 + self.nodes[n].h)
                    .fold(goal_f, f64::min);
                let conflicts = self.nodes[id].conflicts;
                let path = self.extract_path(id);
                return self.finish(Some(path), lb, false, conflicts);
            }
            if !self.experience_index.is_empty() {
                self.push_experiences(id);
            }
            for (next, cost) in self.successors(&state) {
                self.try_insert_or_update(id, next, cost);
            }
        }
        self.finish(None, f64::INFINITY, false, 0)
    }
}

/// Plans one agent from `start` to `goal` under the query's constraints,
/// warm-started from its experiences.
pub fn solve<D: Domain + ?Sized>(
    checker: &CollisionChecker<'_, D>,
    query: LowLevelQuery<'_>,
    params: &LowLevelParams,
) -> Result<LowLevelResult, PlanError> {
    Ok(XwaStar::new(checker, query, params)?.run())
}
