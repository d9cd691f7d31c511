//! Four-connected grid world shared by identical point agents.

use crate::domain::Domain;
use crate::error::DomainError;
use crate::model::{AgentId, Configuration};

/// `width x height` cells addressed as `(x, y)`; row `y = 0` is the first map
/// row. Every move and every wait costs one timestep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridDomain {
    width: i32,
    height: i32,
    blocked: Vec<bool>,
}

impl GridDomain {
    pub fn new(width: usize, height: usize) -> Self {
        GridDomain {
            width: width as i32,
            height: height as i32,
            blocked: vec![false; width * height],
        }
    }

    /// Parses rows of `.` (free) and `#` (blocked).
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self, DomainError> {
        let height = rows.len();
        let width = rows.first().map(|r| r.as_ref().chars().count()).unwrap_or(0);
        if width == 0 || height == 0 {
            return Err(DomainError::Invalid("empty grid map".into()));
        }
        let mut grid = GridDomain::new(width, height);
        for (y, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.chars().count() != width {
                return Err(DomainError::Invalid(format!(
                    "map row {y} has {} cells, expected {width}",
                    row.chars().count()
                )));
            }
            for (x, ch) in row.chars().enumerate() {
                match ch {
                    '.' => {}
                    '#' => grid.set_blocked(x as i32, y as i32, true),
                    other => {
                        return Err(DomainError::Invalid(format!(
                            "map row {y} column {x}: unexpected '{other}'"
                        )))
                    }
                }
            }
        }
        Ok(grid)
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn height(&self) -> usize {
        self.height as usize
    }

    pub fn set_blocked(&mut self, x: i32, y: i32, blocked: bool) {
        let idx = self.index(x, y).expect("cell in bounds");
        self.blocked[idx] = blocked;
    }

    pub fn is_blocked(&self, x: i32, y: i32) -> bool {
        self.index(x, y).map(|i| self.blocked[i]).unwrap_or(true)
    }

    pub fn free_cells(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    pub fn rows(&self) -> Vec<String> {
        (0..self.height)
            .map(|y| {
                (0..self.width)
                    .map(|x| if self.is_blocked(x, y) { '#' } else { '.' })
                    .collect()
            })
            .collect()
    }

    fn index(&self, x: i32, y: i32) -> Option<usize> {
        (x >= 0 && y >= 0 && x < self.width && y < self.height).then(|| (y * self.width + x) as usize)
    }

    fn cell(q: &Configuration) -> (i32, i32) {
        (q[0], q[1])
    }
}

impl Domain for GridDomain {
    fn agent_count(&self) -> Option<usize> {
        None
    }

    fn dimension(&self, _agent: AgentId) -> usize {
        2
    }

    fn in_bounds(&self, _agent: AgentId, q: &Configuration) -> bool {
        q.dim() == 2 && self.index(q[0], q[1]).is_some()
    }

    fn motion_primitives(&self, agent: AgentId, q: &Configuration, out: &mut Vec<Configuration>) {
        for (axis, delta) in [(0, 1), (0, -1), (1, 1), (1, -1)] {
            let n = q.offset(axis, delta);
            if self.in_bounds(agent, &n) {
                out.push(n);
            }
        }
    }

    fn state_free(&self, _agent: AgentId, q: &Configuration) -> bool {
        let (x, y) = Self::cell(q);
        !self.is_blocked(x, y)
    }

    fn segment_free(&self, _agent: AgentId, from: &Configuration, to: &Configuration) -> bool {
        // only unit moves and waits exist on a four-connected grid
        from.l1(to) <= 1
    }

    fn bodies_overlap(&self, _a: AgentId, qa: &Configuration, _b: AgentId, qb: &Configuration) -> bool {
        qa == qb
    }

    fn sweeps_overlap(
        &self,
        _a: AgentId,
        from_a: &Configuration,
        to_a: &Configuration,
        _b: AgentId,
        from_b: &Configuration,
        to_b: &Configuration,
    ) -> bool {
        from_a != to_a && from_a == to_b && to_a == from_b
    }

    fn heuristic(&self, _agent: AgentId, q: &Configuration, goal: &Configuration) -> f64 {
        q.l1(goal) as f64
    }

    fn lattice_size(&self, _agent: AgentId) -> usize {
        self.free_cells()
    }

    fn max_branching(&self, _agent: AgentId) -> usize {
        5
    }
}
