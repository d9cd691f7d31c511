//! Conflict-preserving shortcutting of multi-agent solutions.

use crate::domain::{CollisionChecker, Domain};
use crate::error::PlanError;
use crate::model::{detect_conflicts, AgentId, Configuration, Cost, PairwiseCollision, Path, Solution, Time};

/// Per-agent costs before and after shortcutting.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShortcutReport {
    pub steps_before: Vec<Cost>,
    pub steps_after: Vec<Cost>,
    /// Motion in lattice units.
    pub motion_before: Vec<u64>,
    pub motion_after: Vec<u64>,
    /// Motion in physical units (radians for arms).
    pub rad_before: Vec<f64>,
    pub rad_after: Vec<f64>,
    pub attempted: u64,
    pub accepted: u64,
}

impl ShortcutReport {
    pub fn total_rad_before(&self) -> f64 {
        self.rad_before.iter().sum()
    }

    pub fn total_rad_after(&self) -> f64 {
        self.rad_after.iter().sum()
    }

    pub fn total_steps_after(&self) -> Cost {
        self.steps_after.iter().sum()
    }
}

/// Lattice motion of `path` for `agent`.
pub fn motion_units<D: Domain + ?Sized>(domain: &D, agent: AgentId, path: &Path) -> u64 {
    path.waypoints()
        .windows(2)
        .map(|w| domain.motion_units(agent, &w[0], &w[1]))
        .sum()
}

/// Physical motion of a solution: lattice motion times each agent's motion
/// scale.
pub fn solution_motion<D: Domain + ?Sized>(domain: &D, solution: &Solution) -> f64 {
    solution
        .paths
        .iter()
        .enumerate()
        .map(|(a, p)| motion_units(domain, a, p) as f64 * domain.motion_scale(a))
        .sum()
}

/// `q_a + round(k * (q_b - q_a) / d)` for `k = 0..=d`.
fn interpolate(from: &Configuration, to: &Configuration, d: usize) -> Vec<Configuration> {
    (0..=d)
        .map(|k| {
            let coords: Vec<i32> = from
                .iter()
                .zip(to.iter())
                .map(|(&x, &y)| x + ((k as f64) * f64::from(y - x) / d as f64).round() as i32)
                .collect();
            Configuration::new(&coords)
        })
        .collect()
}

struct Shortcutter<'a, 'd, D: Domain + ?Sized> {
    checker: &'a CollisionChecker<'d, D>,
    paths: Vec<Path>,
    attempted: u64,
    accepted: u64,
}

impl<D: Domain + ?Sized> Shortcutter<'_, '_, D> {
    fn span_valid(&self, agent: AgentId, a: usize, cand: &[Configuration]) -> bool {
        let ck = self.checker;
        for (k, w) in cand.windows(2).enumerate() {
            let (from, to) = (&w[0], &w[1]);
            if !ck.is_state_valid(agent, to) || !ck.is_edge_valid(agent, from, to) {
                return false;
            }
            let t = (a + k) as Time;
            for (j, other) in self.paths.iter().enumerate() {
                if j == agent {
                    continue;
                }
                let (oa, ob) = (other.at(t), other.at(t + 1));
                if ck.vertex_collision(agent, to, j, ob) || ck.edge_collision(agent, from, to, j, oa, ob) {
                    return false;
                }
            }
        }
        true
    }

    /// One left-to-right scan of `agent`'s path; returns whether anything
    /// changed.
    fn pass(&mut self, agent: AgentId) -> bool {
        let domain = self.checker.domain();
        let mut changed = false;
        let mut a = 0;
        while a + 2 < self.paths[agent].len() {
            let mut next = a + 1;
            for b in (a + 2..self.paths[agent].len()).rev() {
                let wp = self.paths[agent].waypoints();
                let cand = interpolate(&wp[a], &wp[b], b - a);
                let old: u64 = wp[a..=b]
                    .windows(2)
                    .map(|w| domain.motion_units(agent, &w[0], &w[1]))
                    .sum();
                let new: u64 = cand.windows(2).map(|w| domain.motion_units(agent, &w[0], &w[1])).sum();
                if new >= old {
                    continue;
                }
                let mut updated = wp.to_vec();
                updated.splice(a..=b, cand.iter().cloned());
                let updated = Path::new(updated);
                if updated.cost() > self.paths[agent].cost() {
                    continue;
                }
                self.attempted += 1;
                if self.span_valid(agent, a, &cand) {
                    self.paths[agent] = updated;
                    self.accepted += 1;
                    changed = true;
                    next = b;
                    break;
                }
            }
            a = next;
        }
        changed
    }
}

/// Shortcuts agents in ascending index order.
pub fn shortcut_solution<D: Domain + ?Sized>(
    solution: &Solution,
    domain: &D,
) -> Result<(Solution, ShortcutReport), PlanError> {
    let order: Vec<AgentId> = (0..solution.paths.len()).collect();
    shortcut_solution_ordered(solution, domain, &order)
}

/// Replaces spans `[a, b]` of each path by the rounded straight
/// interpolation of the same duration whenever that strictly reduces
/// lattice motion, does not delay arrival, and stays valid against the
/// environment and every other agent's current path. Spans are scanned from
/// the start of each path, longest first; passes over all agents repeat
/// until nothing changes, so the result is a fixpoint.
pub fn shortcut_solution_ordered<D: Domain + ?Sized>(
    solution: &Solution,
    domain: &D,
    order: &[AgentId],
) -> Result<(Solution, ShortcutReport), PlanError> {
    let n = solution.paths.len();
    let mut seen = vec![false; n];
    if order.len() != n || !order.iter().all(|&a| a < n && !std::mem::replace(&mut seen[a], true)) {
        return Err(PlanError::InvalidOrder);
    }
    if let Some(a) = solution.paths.iter().position(Path::is_empty) {
        return Err(PlanError::InvalidSolution(format!("agent {a} has an empty path")));
    }
    let checker = CollisionChecker::new(domain, true);
    if let Some(c) = detect_conflicts(&solution.paths, &checker).first() {
        return Err(PlanError::InvalidSolution(format!(
            "agents {} and {} collide at t = {}",
            c.agents.0, c.agents.1, c.time
        )));
    }
    let motion = |paths: &[Path]| -> Vec<u64> {
        paths
            .iter()
            .enumerate()
            .map(|(a, p)| motion_units(domain, a, p))
            .collect()
    };
    let rad = |m: &[u64]| -> Vec<f64> {
        m.iter()
            .enumerate()
            .map(|(a, &u)| u as f64 * domain.motion_scale(a))
            .collect()
    };
    let motion_before = motion(&solution.paths);
    let mut s = Shortcutter {
        checker: &checker,
        paths: solution.paths.clone(),
        attempted: 0,
        accepted: 0,
    };
    loop {
        let mut changed = false;
        for &agent in order {
            changed |= s.pass(agent);
        }
        if !changed {
            break;
        }
    }
    let motion_after = motion(&s.paths);
    let report = ShortcutReport {
        steps_before: solution.paths.iter().map(Path::cost).collect(),
        steps_after: s.paths.iter().map(Path::cost).collect(),
        rad_before: rad(&motion_before),
        rad_after: rad(&motion_after),
        motion_before,
        motion_after,
        attempted: s.attempted,
        accepted: s.accepted,
    };
    Ok((Solution::new(s.paths), report))
}
