use std::cmp::Ordering;

use super::{AgentId, Configuration, Constraint, Path, Time};

/// Pairwise inter-agent collision predicate supplied by a domain.
pub trait PairwiseCollision {
    /// Bodies of `a` at `qa` and `b` at `qb` overlap.
    fn vertex_collision(&self, a: AgentId, qa: &Configuration, b: AgentId, qb: &Configuration) -> bool;

    /// Bodies overlap strictly inside the synchronized transitions
    /// `a: from_a -> to_a` and `b: from_b -> to_b`. Endpoints are covered by
    /// [`PairwiseCollision::vertex_collision`].
    fn edge_collision(
        &self,
        a: AgentId,
        from_a: &Configuration,
        to_a: &Configuration,
        b: AgentId,
        from_b: &Configuration,
        to_b: &Configuration,
    ) -> bool;
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ConflictKind {
    Vertex {
        first: Configuration,
        second: Configuration,
    },
    Edge {
        first: (Configuration, Configuration),
        second: (Configuration, Configuration),
    },
}

/// Collision between agents `agents.0 < agents.1`, at time `time` (vertex) or
/// during `time -> time + 1` (edge).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Conflict {
    pub agents: (AgentId, AgentId),
    pub time: Time,
    pub kind: ConflictKind,
}

impl Conflict {
    fn rank(&self) -> u8 {
        match self.kind {
            ConflictKind::Vertex { .. } => 0,
            ConflictKind::Edge { .. } => 1,
        }
    }

    pub fn is_vertex(&self) -> bool {
        self.rank() == 0
    }

    pub fn involves(&self, agent: AgentId) -> bool {
        self.agents.0 == agent || self.agents.1 == agent
    }
}

impl PartialOrd for Conflict {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Time, then agent pair, then vertex before edge.
impl Ord for Conflict {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .cmp(&other.time)
            .then(self.agents.cmp(&other.agents))
            .then(self.rank().cmp(&other.rank()))
            .then_with(|| match (&self.kind, &other.kind) {
                (ConflictKind::Vertex { first: a1, second: a2 }, ConflictKind::Vertex { first: b1, second: b2 }) => {
                    (a1, a2).cmp(&(b1, b2))
                }
                (ConflictKind::Edge { first: a1, second: a2 }, ConflictKind::Edge { first: b1, second: b2 }) => {
                    (a1, a2).cmp(&(b1, b2))
                }
                _ => Ordering::Equal,
            })
    }
}

fn pair_conflicts<C: PairwiseCollision + ?Sized>(
    paths: &[Path],
    i: AgentId,
    j: AgentId,
    checker: &C,
    out: &mut Vec<Conflict>,
) {
    let (pi, pj) = (&paths[i], &paths[j]);
    let horizon = pi.len().max(pj.len()) as Time;
    for t in 0..horizon {
        let (qi, qj) = (pi.at(t), pj.at(t));
        if checker.vertex_collision(i, qi, j, qj) {
            out.push(Conflict {
                agents: (i, j),
                time: t,
                kind: ConflictKind::Vertex {
                    first: qi.clone(),
                    second: qj.clone(),
                },
            });
        }
        if t + 1 < horizon {
            let (ni, nj) = (pi.at(t + 1), pj.at(t + 1));
            if checker.edge_collision(i, qi, ni, j, qj, nj) {
                out.push(Conflict {
                    agents: (i, j),
                    time: t,
                    kind: ConflictKind::Edge {
                        first: (qi.clone(), ni.clone()),
                        second: (qj.clone(), nj.clone()),
                    },
                });
            }
        }
    }
}

/// Every vertex and edge conflict over all agent pairs and timesteps, sorted
/// by `(time, agent pair, vertex-before-edge)`. Agents whose path has ended
/// are parked at their last configuration.
pub fn detect_conflicts<C: PairwiseCollision + ?Sized>(paths: &[Path], checker: &C) -> Vec<Conflict> {
    let mut out = Vec::new();
    for i in 0..paths.len() {
        for j in i + 1..paths.len() {
            pair_conflicts(paths, i, j, checker, &mut out);
        }
    }
    out.sort();
    out
}

/// Conflicts between `agent` and every other agent, sorted like
/// [`detect_conflicts`].
pub fn conflicts_involving<C: PairwiseCollision + ?Sized>(
    paths: &[Path],
    agent: AgentId,
    checker: &C,
) -> Vec<Conflict> {
    let mut out = Vec::new();
    for other in 0..paths.len() {
        if other == agent {
            continue;
        }
        let (i, j) = if agent < other { (agent, other) } else { (other, agent) };
        pair_conflicts(paths, i, j, checker, &mut out);
    }
    out.sort();
    out
}

/// The two constraints that resolve `c`: each agent is barred from its own
/// participating vertex (or edge) at the conflict time. No conflict-free
/// solution can break both.
pub fn conflict_to_constraints(c: &Conflict) -> [Constraint; 2] {
    let (i, j) = c.agents;
    match &c.kind {
        ConflictKind::Vertex { first, second } => [
            Constraint::vertex(i, first.clone(), c.time),
            Constraint::vertex(j, second.clone(), c.time),
        ],
        ConflictKind::Edge { first, second } => [
            Constraint::edge(i, first.0.clone(), first.1.clone(), c.time),
            Constraint::edge(j, second.0.clone(), second.1.clone(), c.time),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Point agents on a line: same cell collides, swaps collide mid-edge.
    struct Points;

    impl PairwiseCollision for Points {
        fn vertex_collision(&self, _: AgentId, qa: &Configuration, _: AgentId, qb: &Configuration) -> bool {
            qa == qb
        }

        fn edge_collision(
            &self,
            _: AgentId,
            fa: &Configuration,
            ta: &Configuration,
            _: AgentId,
            fb: &Configuration,
            tb: &Configuration,
        ) -> bool {
            fa != ta && fa == tb && ta == fb
        }
    }

    /// Agents never touch.
    struct Disjoint;

    impl PairwiseCollision for Disjoint {
        fn vertex_collision(&self, _: AgentId, _: &Configuration, _: AgentId, _: &Configuration) -> bool {
            false
        }

        fn edge_collision(
            &self,
            _: AgentId,
            _: &Configuration,
            _: &Configuration,
            _: AgentId,
            _: &Configuration,
            _: &Configuration,
        ) -> bool {
            false
        }
    }

    fn path(xs: &[i32]) -> Path {
        Path::new(xs.iter().map(|&x| Configuration::new(&[x])).collect())
    }

    fn c(x: i32) -> Configuration {
        Configuration::new(&[x])
    }

    #[test]
    fn swap_is_one_edge_conflict() {
        let cs = detect_conflicts(&[path(&[0, 1]), path(&[1, 0])], &Points);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].time, 0);
        assert!(!cs[0].is_vertex());
    }

    #[test]
    fn identical_single_cell_paths_conflict_at_zero() {
        let cs = detect_conflicts(&[path(&[4]), path(&[4])], &Points);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].time, 0);
        assert!(cs[0].is_vertex());
    }

    #[test]
    fn disjoint_agents_have_no_conflicts() {
        let cs = detect_conflicts(&[path(&[0, 1, 2]), path(&[0, 1, 2])], &Disjoint);
        assert!(cs.is_empty());
    }

    #[test]
    fn parked_agent_conflicts_after_its_path_ends() {
        // agent 0 parks at 2 from t = 1, agent 1 walks into it at t = 3
        let cs = detect_conflicts(&[path(&[1, 2]), path(&[5, 4, 3, 2])], &Points);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].time, 3);
        let cons = conflict_to_constraints(&cs[0]);
        assert_eq!(cons[0], Constraint::vertex(0, c(2), 3));
        assert_eq!(cons[1], Constraint::vertex(1, c(2), 3));
    }

    #[test]
    fn ordering_is_time_then_pair() {
        let paths = [path(&[0, 0, 0]), path(&[1, 0, 1]), path(&[0, 0, 0])];
        let cs = detect_conflicts(&paths, &Points);
        let keys: Vec<_> = cs.iter().map(|c| (c.time, c.agents)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(keys[0], (0, (0, 2)));
        assert_eq!(keys[1], (1, (0, 1)));
    }

    #[test]
    fn incremental_matches_full() {
        let paths = [path(&[0, 1, 2]), path(&[2, 1, 0]), path(&[1, 1, 1, 2])];
        let full = detect_conflicts(&paths, &Points);
        for a in 0..3 {
            let mine: Vec<_> = full.iter().filter(|c| c.involves(a)).cloned().collect();
            assert_eq!(conflicts_involving(&paths, a, &Points), mine);
        }
    }

    #[test]
    fn constraints_from_conflicts() {
        let edge = Conflict {
            agents: (0, 1),
            time: 2,
            kind: ConflictKind::Edge {
                first: (c(0), c(1)),
                second: (c(1), c(0)),
            },
        };
        assert_eq!(
            conflict_to_constraints(&edge),
            [Constraint::edge(0, c(0), c(1), 2), Constraint::edge(1, c(1), c(0), 2)]
        );
        let vertex = Conflict {
            agents: (0, 1),
            time: 5,
            kind: ConflictKind::Vertex {
                first: c(3),
                second: c(4),
            },
        };
        assert_eq!(
            conflict_to_constraints(&vertex),
            [Constraint::vertex(0, c(3), 5), Constraint::vertex(1, c(4), 5)]
        );
    }
}
