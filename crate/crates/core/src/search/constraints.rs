use rustc_hash::{FxHashMap, FxHashSet};

use crate::model::{AgentId, Configuration, Constraint, ConstraintKind, Time};

/// Constraint lookup for one agent.
#[derive(Clone, Debug, Default)]
pub struct AgentConstraints {
    vertex: FxHashSet<(Configuration, Time)>,
    edge: FxHashSet<(Configuration, Configuration, Time)>,
    /// Latest vertex constraint time per configuration.
    vertex_latest: FxHashMap<Configuration, Time>,
    /// Latest wait-in-place edge constraint time per configuration.
    wait_latest: FxHashMap<Configuration, Time>,
    latest: Option<Time>,
}

impl AgentConstraints {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index of the constraints in `all` that name `agent`.
    pub fn for_agent<'a>(agent: AgentId, all: impl IntoIterator<Item = &'a Constraint>) -> Self {
        let mut out = Self::new();
        for c in all.into_iter().filter(|c| c.agent == agent) {
            out.add(c);
        }
        out
    }

    pub fn add(&mut self, c: &Constraint) {
        match &c.kind {
            ConstraintKind::Vertex(q) => {
                self.vertex.insert((q.clone(), c.time));
                let e = self.vertex_latest.entry(q.clone()).or_insert(c.time);
                *e = (*e).max(c.time);
            }
            ConstraintKind::Edge(from, to) => {
                self.edge.insert((from.clone(), to.clone(), c.time));
                if from == to {
                    let e = self.wait_latest.entry(from.clone()).or_insert(c.time);
                    *e = (*e).max(c.time);
                }
            }
        }
        self.latest = Some(self.latest.map_or(c.time, |l| l.max(c.time)));
    }

    pub fn len(&self) -> usize {
        self.vertex.len() + self.edge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn latest_time(&self) -> Option<Time> {
        self.latest
    }

    pub fn forbids_vertex(&self, q: &Configuration, t: Time) -> bool {
        !self.vertex.is_empty() && self.vertex.contains(&(q.clone(), t))
    }

    pub fn forbids_edge(&self, from: &Configuration, to: &Configuration, t: Time) -> bool {
        !self.edge.is_empty() && self.edge.contains(&(from.clone(), to.clone(), t))
    }

    /// Some constraint would be broken by parking at `q` from time `t` on.
    pub fn blocks_parking(&self, q: &Configuration, t: Time) -> bool {
        self.vertex_latest.get(q).is_some_and(|&l| l > t) || self.wait_latest.get(q).is_some_and(|&l| l >= t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: i32) -> Configuration {
        Configuration::new(&[x])
    }

    #[test]
    fn lookup_and_parking() {
        let cons = [
            Constraint::vertex(0, c(2), 4),
            Constraint::edge(0, c(1), c(2), 1),
            Constraint::edge(0, c(3), c(3), 6),
            Constraint::vertex(1, c(5), 9),
        ];
        let ac = AgentConstraints::for_agent(0, &cons);
        assert_eq!(ac.len(), 3);
        assert_eq!(ac.latest_time(), Some(6));
        assert!(ac.forbids_vertex(&c(2), 4));
        assert!(!ac.forbids_vertex(&c(5), 9));
        assert!(ac.forbids_edge(&c(1), &c(2), 1));
        assert!(!ac.forbids_edge(&c(2), &c(1), 1));
        assert!(ac.blocks_parking(&c(2), 3));
        assert!(!ac.blocks_parking(&c(2), 4));
        assert!(ac.blocks_parking(&c(3), 6));
        assert!(!ac.blocks_parking(&c(3), 7));
    }
}
