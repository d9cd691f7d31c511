use std::collections::BTreeSet;
use std::ops::Bound::{Excluded, Included};

use ordered_float::OrderedFloat;

#[derive(Clone, Debug)]
struct Entry<O, F> {
    f1: OrderedFloat<f64>,
    value: OrderedFloat<f64>,
    open_key: O,
    focal_key: F,
}

/// OPEN ordered by `(f1, open_key)` plus a FOCAL sub-queue ordered by
/// `focal_key` over `{ n in OPEN | value(n) <= weight * min f1 }`.
///
/// Items are dense `usize` ids. Low-level search uses `value = f1`; the
/// ECBS high level uses `f1 = LB` and `value = cost`. FOCAL is re-filtered at
/// every extraction, so membership is exact at the moment an item is popped.
/// When FOCAL is disabled, [`FocalQueue::pop`] is plain best-first on OPEN.
#[derive(Clone, Debug)]
pub struct FocalQueue<O, F> {
    weight: f64,
    focal_enabled: bool,
    open: BTreeSet<(OrderedFloat<f64>, O, usize)>,
    by_value: BTreeSet<(OrderedFloat<f64>, usize)>,
    focal: BTreeSet<(F, usize)>,
    entries: Vec<Option<Entry<O, F>>>,
    focal_bound: OrderedFloat<f64>,
}

impl<O: Ord + Clone, F: Ord + Clone> FocalQueue<O, F> {
    pub fn new(weight: f64, focal_enabled: bool) -> Self {
        FocalQueue {
            weight,
            focal_enabled,
            open: BTreeSet::new(),
            by_value: BTreeSet::new(),
            focal: BTreeSet::new(),
            entries: Vec::new(),
            focal_bound: OrderedFloat(f64::NEG_INFINITY),
        }
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.entries.get(id).is_some_and(Option::is_some)
    }

    pub fn min_f1(&self) -> Option<f64> {
        self.open.first().map(|(f, _, _)| f.0)
    }

    /// Ids currently in OPEN, in OPEN order.
    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.open.iter().map(|(_, _, id)| *id)
    }

    /// Inserts `id`, replacing any previous entry for it.
    pub fn insert(&mut self, id: usize, f1: f64, value: f64, open_key: O, focal_key: F) {
        self.remove(id);
        if self.entries.len() <= id {
            self.entries.resize_with(id + 1, || None);
        }
        let (f1, value) = (OrderedFloat(f1), OrderedFloat(value));
        self.open.insert((f1, open_key.clone(), id));
        if self.focal_enabled {
            self.by_value.insert((value, id));
            if value <= self.focal_bound {
                self.focal.insert((focal_key.clone(), id));
            }
        }
        self.entries[id] = Some(Entry {
            f1,
            value,
            open_key,
            focal_key,
        });
    }

    pub fn remove(&mut self, id: usize) -> bool {
        let Some(entry) = self.entries.get_mut(id).and_then(Option::take) else {
            return false;
        };
        self.open.remove(&(entry.f1, entry.open_key, id));
        if self.focal_enabled {
            self.by_value.remove(&(entry.value, id));
            self.focal.remove(&(entry.focal_key, id));
        }
        true
    }

    /// Brings FOCAL in line with the current `weight * min f1` bound.
    fn refresh_focal(&mut self) {
        let Some(min) = self.min_f1() else {
            return;
        };
        let bound = OrderedFloat(self.weight * min);
        if bound > self.focal_bound {
            let added: Vec<usize> = self
                .by_value
                .range((Excluded((self.focal_bound, usize::MAX)), Included((bound, usize::MAX))))
                .map(|(_, id)| *id)
                .collect();
            for id in added {
                let key = self.entries[id].as_ref().expect("queued").focal_key.clone();
                self.focal.insert((key, id));
            }
        } else if bound < self.focal_bound {
            let dropped: Vec<usize> = self
                .by_value
                .range((Excluded((bound, usize::MAX)), Included((self.focal_bound, usize::MAX))))
                .map(|(_, id)| *id)
                .collect();
            for id in dropped {
                let key = self.entries[id].as_ref().expect("queued").focal_key.clone();
                self.focal.remove(&(key, id));
            }
        }
        self.focal_bound = bound;
    }

    /// Removes and returns the next item: the FOCAL head, or the OPEN head
    /// when FOCAL is disabled or empty.
    pub fn pop(&mut self) -> Option<usize> {
        let id = if self.focal_enabled {
            self.refresh_focal();
            match self.focal.first() {
                Some((_, id)) => *id,
                None => self.open.first()?.2,
            }
        } else {
            self.open.first()?.2
        };
        self.remove(id);
        Some(id)
    }

    /// Current FOCAL members after re-filtering, in FOCAL order.
    pub fn focal_ids(&mut self) -> Vec<usize> {
        if !self.focal_enabled {
            return self.open.first().map(|(_, _, id)| *id).into_iter().collect();
        }
        self.refresh_focal();
        self.focal.iter().map(|(_, id)| *id).collect()
    }
}
