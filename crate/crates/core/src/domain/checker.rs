use std::sync::atomic::{AtomicU64, Ordering::Relaxed};

use parking_lot::RwLock;
use rustc_hash::FxHashMap;

use super::Domain;
use crate::model::{AgentId, Configuration, PairwiseCollision};

/// Memo of static validity results, keyed per agent on lattice coordinates.
///
/// Entries are never overwritten: the environment is static for the lifetime
/// of a planning query. Concurrent readers, serialized writers.
#[derive(Default, Debug)]
pub struct TransitionCache {
    states: RwLock<FxHashMap<(AgentId, Configuration), bool>>,
    edges: RwLock<FxHashMap<(AgentId, Configuration, Configuration), bool>>,
}

impl TransitionCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn edge_key(agent: AgentId, a: &Configuration, b: &Configuration) -> (AgentId, Configuration, Configuration) {
        if a <= b {
            (agent, a.clone(), b.clone())
        } else {
            (agent, b.clone(), a.clone())
        }
    }

    pub fn state(&self, agent: AgentId, q: &Configuration) -> Option<bool> {
        self.states.read().get(&(agent, q.clone())).copied()
    }

    pub fn insert_state(&self, agent: AgentId, q: &Configuration, valid: bool) {
        self.states.write().entry((agent, q.clone())).or_insert(valid);
    }

    pub fn edge(&self, agent: AgentId, a: &Configuration, b: &Configuration) -> Option<bool> {
        self.edges.read().get(&Self::edge_key(agent, a, b)).copied()
    }

    pub fn insert_edge(&self, agent: AgentId, a: &Configuration, b: &Configuration, valid: bool) {
        self.edges.write().entry(Self::edge_key(agent, a, b)).or_insert(valid);
    }

    pub fn len(&self) -> usize {
        self.states.read().len() + self.edges.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Snapshot of checker counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckCounters {
    /// Geometric tests against the static environment.
    pub static_checks: u64,
    /// Geometric agent-agent tests.
    pub pairwise_checks: u64,
    /// Static validity queries answered by the cache.
    pub cache_hits: u64,
}

impl CheckCounters {
    pub fn collision_checks(&self) -> u64 {
        self.static_checks + self.pairwise_checks
    }

    pub fn since(&self, earlier: &CheckCounters) -> CheckCounters {
        CheckCounters {
            static_checks: self.static_checks - earlier.static_checks,
            pairwise_checks: self.pairwise_checks - earlier.pairwise_checks,
            cache_hits: self.cache_hits - earlier.cache_hits,
        }
    }
}

/// Counting, optionally caching front end to a [`Domain`] for one planning
/// query.
pub struct CollisionChecker<'d, D: ?Sized> {
    domain: &'d D,
    cache: Option<TransitionCache>,
    static_checks: AtomicU64,
    pairwise_checks: AtomicU64,
    cache_hits: AtomicU64,
}

impl<'d, D: Domain + ?Sized> CollisionChecker<'d, D> {
    pub fn new(domain: &'d D, use_cache: bool) -> Self {
        CollisionChecker {
            domain,
            cache: use_cache.then(TransitionCache::new),
            static_checks: AtomicU64::new(0),
            pairwise_checks: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        }
    }

    pub fn domain(&self) -> &'d D {
        self.domain
    }

    pub fn cache(&self) -> Option<&TransitionCache> {
        self.cache.as_ref()
    }

    pub fn counters(&self) -> CheckCounters {
        CheckCounters {
            static_checks: self.static_checks.load(Relaxed),
            pairwise_checks: self.pairwise_checks.load(Relaxed),
            cache_hits: self.cache_hits.load(Relaxed),
        }
    }

    /// In bounds and clear of the static environment.
    pub fn is_state_valid(&self, agent: AgentId, q: &Configuration) -> bool {
        if !self.domain.in_bounds(agent, q) {
            return false;
        }
        if let Some(cache) = &self.cache {
            if let Some(v) = cache.state(agent, q) {
                self.cache_hits.fetch_add(1, Relaxed);
                return v;
            }
        }
        self.static_checks.fetch_add(1, Relaxed);
        let valid = self.domain.state_free(agent, q);
        if let Some(cache) = &self.cache {
            cache.insert_state(agent, q, valid);
        }
        valid
    }

    /// The interpolated motion `from -> to` is clear of the static
    /// environment strictly between its endpoints. Waits are always valid
    /// here; callers check endpoint states separately.
    pub fn is_edge_valid(&self, agent: AgentId, from: &Configuration, to: &Configuration) -> bool {
        if from == to {
            return true;
        }
        if let Some(cache) = &self.cache {
            if let Some(v) = cache.edge(agent, from, to) {
                self.cache_hits.fetch_add(1, Relaxed);
                return v;
            }
        }
        self.static_checks.fetch_add(1, Relaxed);
        let valid = self.domain.segment_free(agent, from, to);
        if let Some(cache) = &self.cache {
            cache.insert_edge(agent, from, to, valid);
        }
        valid
    }

    /// Endpoint states and the motion between them are all valid.
    pub fn is_motion_valid(&self, agent: AgentId, from: &Configuration, to: &Configuration) -> bool {
        self.is_state_valid(agent, from) && self.is_state_valid(agent, to) && self.is_edge_valid(agent, from, to)
    }
}

impl<D: Domain + ?Sized> PairwiseCollision for CollisionChecker<'_, D> {
    fn vertex_collision(&self, a: AgentId, qa: &Configuration, b: AgentId, qb: &Configuration) -> bool {
        self.pairwise_checks.fetch_add(1, Relaxed);
        self.domain.bodies_overlap(a, qa, b, qb)
    }

    fn edge_collision(
        &self,
        a: AgentId,
        from_a: &Configuration,
        to_a: &Configuration,
        b: AgentId,
        from_b: &Configuration,
        to_b: &Configuration,
    ) -> bool {
        if from_a == to_a && from_b == to_b {
            return false;
        }
        self.pairwise_checks.fetch_add(1, Relaxed);
        self.domain.sweeps_overlap(a, from_a, to_a, b, from_b, to_b)
    }
}
