//! Seeded scene generators.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with the trial seed, so a
//! fixed seed reproduces the same document byte for byte.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use xcbs_core::{AgentId, CollisionChecker, Configuration, Domain, GridDomain, PairwiseCollision, Point2};

use crate::scene::{round9, AgentDoc, ArmDoc, DomainKind, ObstacleDoc, SceneDoc};

/// Attempts per generated scene before giving up.
pub const MAX_ATTEMPTS: usize = 200;

/// Endpoint draws per agent within one attempt.
const PER_AGENT_TRIES: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("bad generator spec: {0}")]
    Spec(String),
    #[error("{kind}: no feasible scene after {attempts} attempts")]
    Exhausted { kind: &'static str, attempts: usize },
}

/// When the circle scene gets its central obstacle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CenterObstacle {
    /// Only for six or more arms.
    Auto,
    On,
    Off,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GenerateSpec {
    /// Arms with bases evenly spaced on a circle, each facing the center.
    CircleArms {
        n: usize,
        radius: f64,
        obstacle: CenterObstacle,
    },
    /// Grid split into corridors by walls with random doors, plus random clutter.
    CorridorGrid {
        n: usize,
        width: usize,
        height: usize,
        density: f64,
    },
    /// A row of arms reaching into slots of a shelf in front of them.
    ShelfLite { n: usize, slots: usize },
}

impl GenerateSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GenerateSpec::CircleArms { .. } => "circle-arms",
            GenerateSpec::CorridorGrid { .. } => "corridor-grid",
            GenerateSpec::ShelfLite { .. } => "shelf-lite",
        }
    }

    pub fn agents(&self) -> usize {
        match *self {
            GenerateSpec::CircleArms { n, .. }
            | GenerateSpec::CorridorGrid { n, .. }
            | GenerateSpec::ShelfLite { n, .. } => n,
        }
    }

    pub fn scene_name(&self, seed: u64) -> String {
        format!("{}-n{}-s{seed}", self.kind(), self.agents())
    }

    pub fn generate(&self, seed: u64) -> Result<SceneDoc, GenerateError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut doc = match *self {
            GenerateSpec::CircleArms { n, radius, obstacle } => circle_arms(&mut rng, n, radius, obstacle)?,
            GenerateSpec::CorridorGrid {
                n,
                width,
                height,
                density,
            } => corridor_grid(&mut rng, n, width, height, density)?,
            GenerateSpec::ShelfLite { n, slots } => shelf_lite(&mut rng, n, slots)?,
        };
        doc.name = Some(self.scene_name(seed));
        doc.normalize();
        Ok(doc)
    }
}

impl fmt::Display for GenerateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenerateSpec::CircleArms { n, radius, obstacle } => {
                let o = match obstacle {
                    CenterObstacle::Auto => "auto",
                    CenterObstacle::On => "on",
                    CenterObstacle::Off => "off",
                };
                write!(f, "circle-arms:n={n},radius={radius},obstacle={o}")
            }
            GenerateSpec::CorridorGrid {
                n,
                width,
                height,
                density,
            } => write!(f, "corridor-grid:n={n},width={width},height={height},density={density}"),
            GenerateSpec::ShelfLite { n, slots } => write!(f, "shelf-lite:n={n},slots={slots}"),
        }
    }
}

/// Circle radius keeping neighbouring bases roughly as far apart as a
/// small crowd of arms on a radius-2 circle.
pub fn default_radius(n: usize) -> f64 {
    (0.45 * n as f64).max(2.0)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, GenerateError> {
    value
        .parse()
        .map_err(|_| GenerateError::Spec(format!("cannot parse `{key}={value}`")))
}

/// `kind:key=value,...`, e.g. `circle-arms:n=3` or
/// `corridor-grid:n=4,width=10,height=8,density=0.15`.
impl FromStr for GenerateSpec {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let (mut radius_set, mut slots_set) = (false, false);
        let mut spec = match kind.trim() {
            "circle-arms" => GenerateSpec::CircleArms {
                n: 2,
                radius: 2.0,
                obstacle: CenterObstacle::Auto,
            },
            "corridor-grid" => GenerateSpec::CorridorGrid {
                n: 4,
                width: 10,
                height: 8,
                density: 0.1,
            },
            "shelf-lite" => GenerateSpec::ShelfLite { n: 2, slots: 3 },
            other => {
                return Err(GenerateError::Spec(format!(
                    "unknown generator `{other}` (expected circle-arms, corridor-grid or shelf-lite)"
                )))
            }
        };
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| GenerateError::Spec(format!("expected key=value, got `{item}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match (&mut spec, key) {
                (GenerateSpec::CircleArms { n, .. }, "n")
                | (GenerateSpec::CorridorGrid { n, .. }, "n")
                | (GenerateSpec::ShelfLite { n, .. }, "n") => *n = parse_value(key, value)?,
                (GenerateSpec::CircleArms { radius, .. }, "radius") => {
                    *radius = parse_value(key, value)?;
                    radius_set = true;
                }
                (GenerateSpec::CircleArms { obstacle, .. }, "obstacle") => {
                    *obstacle = match value {
                        "auto" => CenterObstacle::Auto,
                        "on" => CenterObstacle::On,
                        "off" => CenterObstacle::Off,
                        _ => {
                            return Err(GenerateError::Spec(format!(
                                "obstacle must be auto, on or off, got `{value}`"
                            )))
                        }
                    }
                }
                (GenerateSpec::CorridorGrid { width, .. }, "width") => *width = parse_value(key, value)?,
                (GenerateSpec::CorridorGrid { height, .. }, "height") => *height = parse_value(key, value)?,
                (GenerateSpec::CorridorGrid { density, .. }, "density") => *density = parse_value(key, value)?,
                (GenerateSpec::ShelfLite { slots, .. }, "slots") => {
                    *slots = parse_value(key, value)?;
                    slots_set = true;
                }
                _ => return Err(GenerateError::Spec(format!("`{key}` is not a parameter of {kind}"))),
            }
        }
        match &mut spec {
            GenerateSpec::CircleArms { n, radius, .. } if !radius_set => *radius = default_radius(*n),
            GenerateSpec::ShelfLite { n, slots } if !slots_set => *slots = 2 * *n + 1,
            _ => {}
        }
        spec.check()?;
        Ok(spec)
    }
}

impl GenerateSpec {
    fn check(&self) -> Result<(), GenerateError> {
        let bad = |m: &str| Err(GenerateError::Spec(m.to_string()));
        match *self {
            GenerateSpec::CircleArms { n, radius, .. } => {
                if n == 0 {
                    return bad("n must be positive");
                }
                if !(radius.is_finite() && radius > 0.0) {
                    return bad("radius must be positive");
                }
            }
            GenerateSpec::CorridorGrid {
                n,
                width,
                height,
                density,
            } => {
                if n == 0 || width == 0 || height == 0 {
                    return bad("n, width and height must be positive");
                }
                if !(0.0..1.0).contains(&density) {
                    return bad("density must lie in [0, 1)");
                }
                if 2 * n > width * height {
                    return bad("too many agents for the grid");
                }
            }
            GenerateSpec::ShelfLite { n, slots } => {
                if n == 0 || slots < 2 {
                    return bad("need n >= 1 and slots >= 2");
                }
            }
        }
        Ok(())
    }
}

/// Whether `goal` is reachable from `start` for a single agent ignoring time
/// and other agents. Greedy best-first over the lattice.
pub fn reachable<D: Domain + ?Sized>(
    checker: &CollisionChecker<'_, D>,
    agent: AgentId,
    start: &Configuration,
    goal: &Configuration,
) -> bool {
    let domain = checker.domain();
    if !checker.is_state_valid(agent, start) || !checker.is_state_valid(agent, goal) {
        return false;
    }
    let key = |q: &Configuration| (domain.heuristic(agent, q, goal) * 1e6) as u64;
    let mut seen = HashSet::from([start.clone()]);
    let mut open = BinaryHeap::from([(Reverse(key(start)), start.clone())]);
    let mut succ = Vec::new();
    while let Some((_, q)) = open.pop() {
        if &q == goal {
            return true;
        }
        succ.clear();
        domain.motion_primitives(agent, &q, &mut succ);
        for next in succ.drain(..) {
            if next == q || seen.contains(&next) {
                continue;
            }
            if checker.is_state_valid(agent, &next) && checker.is_edge_valid(agent, &q, &next) {
                seen.insert(next.clone());
                open.push((Reverse(key(&next)), next));
            }
        }
    }
    false
}

fn arm_doc(base: [f64; 2], base_angle: f64, links: &[f64]) -> ArmDoc {
    ArmDoc {
        base: base.map(round9),
        base_angle: round9(base_angle),
        link_lengths: links.to_vec(),
        resolution: PI / 16.0,
        limits: None,
    }
}

/// Draws endpoints for arm agents until every start and goal is valid, the
/// starts (and the goals) are pairwise collision-free and each goal is
/// reachable from its start.
fn sample_arm_agents(
    rng: &mut ChaCha8Rng,
    doc: &mut SceneDoc,
    kind: &'static str,
    mut sample: impl FnMut(&mut ChaCha8Rng, AgentId, &xcbs_core::ArmDomain<f64>) -> Option<(Vec<i32>, Vec<i32>)>,
) -> Result<(), GenerateError> {
    let n = doc.arms.len();
    doc.agents = vec![
        AgentDoc {
            start: vec![],
            goal: vec![]
        };
        n
    ];
    let domain = doc.build_arm_domain().expect("generated arm parameters are valid");
    let checker = CollisionChecker::new(&domain, true);
    'attempt: for _ in 0..MAX_ATTEMPTS {
        let mut agents: Vec<AgentDoc> = Vec::with_capacity(n);
        for a in 0..n {
            let fits = |s: &Configuration, g: &Configuration, agents: &[AgentDoc]| {
                checker.is_state_valid(a, s)
                    && checker.is_state_valid(a, g)
                    && agents.iter().enumerate().all(|(b, other)| {
                        let (os, og) = (Configuration::new(&other.start), Configuration::new(&other.goal));
                        !checker.vertex_collision(a, s, b, &os) && !checker.vertex_collision(a, g, b, &og)
                    })
            };
            let found = (0..PER_AGENT_TRIES).find_map(|_| {
                let (s, g) = sample(rng, a, &domain)?;
                let (s, g) = (Configuration::new(&s), Configuration::new(&g));
                (fits(&s, &g, &agents) && reachable(&checker, a, &s, &g)).then_some((s, g))
            });
            let Some((s, g)) = found else {
                continue 'attempt;
            };
            agents.push(AgentDoc {
                start: s.coords().to_vec(),
                goal: g.coords().to_vec(),
            });
        }
        doc.agents = agents;
        return Ok(());
    }
    Err(GenerateError::Exhausted {
        kind,
        attempts: MAX_ATTEMPTS,
    })
}

const CIRCLE_LINKS: [f64; 3] = [1.0, 0.8, 0.6];
const CIRCLE_THICKNESS: f64 = 0.08;

fn circle_arms(
    rng: &mut ChaCha8Rng,
    n: usize,
    radius: f64,
    obstacle: CenterObstacle,
) -> Result<SceneDoc, GenerateError> {
    let arms = (0..n)
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / n as f64;
            let facing = if phi < PI { phi + PI } else { phi - PI };
            arm_doc([radius * phi.cos(), radius * phi.sin()], facing, &CIRCLE_LINKS)
        })
        .collect();
    let center = match obstacle {
        CenterObstacle::Auto => n >= 6,
        CenterObstacle::On => true,
        CenterObstacle::Off => false,
    };
    let obstacles = if center {
        vec![ObstacleDoc {
            segment: Some([-0.25, 0.0, 0.25, 0.0]),
            disc: None,
        }]
    } else {
        vec![]
    };
    let mut doc = SceneDoc {
        name: None,
        domain: DomainKind::Arm,
        map: vec![],
        thickness: Some(CIRCLE_THICKNESS),
        substeps: None,
        arms,
        obstacles,
        agents: vec![],
    };
    // Shoulder within ±45° of the center, elbow and wrist within ±90°.
    let draw = |rng: &mut ChaCha8Rng| -> Vec<i32> {
        vec![rng.gen_range(-4..=4), rng.gen_range(-8..=8), rng.gen_range(-8..=8)]
    };
    sample_arm_agents(rng, &mut doc, "circle-arms", |rng, _, _| {
        let (s, g) = (draw(rng), draw(rng));
        let d: i32 = s.iter().zip(&g).map(|(a, b)| (a - b).abs()).sum();
        (d >= 6).then_some((s, g))
    })?;
    Ok(doc)
}

const SHELF_LINKS: [f64; 3] = [0.9, 0.7, 0.5];
const SHELF_SPACING: f64 = 1.6;
const SHELF_Y: f64 = 1.4;
const SLOT_WIDTH: f64 = 0.5;
const SLOT_DEPTH: f64 = 0.5;

fn shelf_lite(rng: &mut ChaCha8Rng, n: usize, slots: usize) -> Result<SceneDoc, GenerateError> {
    let arms = (0..n)
        .map(|i| arm_doc([i as f64 * SHELF_SPACING, 0.0], PI / 2.0, &SHELF_LINKS))
        .collect();
    // Slots span the row of bases; dividers sit between neighbouring slots.
    let span = (n - 1) as f64 * SHELF_SPACING;
    let pitch = (span + 2.0 * SLOT_WIDTH) / slots as f64;
    let left = -SLOT_WIDTH;
    let slot_x: Vec<f64> = (0..slots).map(|s| left + pitch * (s as f64 + 0.5)).collect();
    let back = SHELF_Y + SLOT_DEPTH;
    let mut obstacles = vec![ObstacleDoc {
        segment: Some([left, back, left + pitch * slots as f64, back]),
        disc: None,
    }];
    for s in 0..=slots {
        let x = left + pitch * s as f64;
        obstacles.push(ObstacleDoc {
            segment: Some([x, SHELF_Y, x, back]),
            disc: None,
        });
    }
    let mut doc = SceneDoc {
        name: None,
        domain: DomainKind::Arm,
        map: vec![],
        thickness: Some(0.05),
        substeps: None,
        arms,
        obstacles,
        agents: vec![],
    };
    let slot_center = |s: usize| Point2::new(slot_x[s], SHELF_Y + 0.5 * SLOT_DEPTH);
    // Rejection-samples a configuration whose tool tip sits inside slot `s`.
    let approach = |rng: &mut ChaCha8Rng, agent: AgentId, domain: &xcbs_core::ArmDomain<f64>, s: usize| {
        for _ in 0..4000 {
            let q = vec![rng.gen_range(-8..=8), rng.gen_range(-8..=8), rng.gen_range(-8..=8)];
            let pts = domain.forward_kinematics(agent, &Configuration::new(&q)).ok()?;
            let tip = *pts.last()?;
            if tip.distance(slot_center(s)) < 0.2 {
                return Some(q);
            }
        }
        None
    };
    sample_arm_agents(rng, &mut doc, "shelf-lite", |rng, agent, domain| {
        let a = rng.gen_range(0..slots);
        let b = (a + rng.gen_range(1..slots)) % slots;
        Some((approach(rng, agent, domain, a)?, approach(rng, agent, domain, b)?))
    })?;
    Ok(doc)
}

fn corridor_grid(
    rng: &mut ChaCha8Rng,
    n: usize,
    width: usize,
    height: usize,
    density: f64,
) -> Result<SceneDoc, GenerateError> {
    'attempt: for _ in 0..MAX_ATTEMPTS {
        let mut grid = GridDomain::new(width, height);
        // Walls on every third column, each with one or two doors.
        for x in (2..width.saturating_sub(1)).step_by(3) {
            for y in 0..height {
                grid.set_blocked(x as i32, y as i32, true);
            }
            for _ in 0..rng.gen_range(1..=2) {
                grid.set_blocked(x as i32, rng.gen_range(0..height) as i32, false);
            }
        }
        for x in 0..width {
            for y in 0..height {
                if rng.gen_bool(density) {
                    grid.set_blocked(x as i32, y as i32, true);
                }
            }
        }
        let free: Vec<(i32, i32)> = (0..height as i32)
            .flat_map(|y| (0..width as i32).map(move |x| (x, y)))
            .filter(|&(x, y)| !grid.is_blocked(x, y))
            .collect();
        if free.len() < 2 * n {
            continue;
        }
        let checker = CollisionChecker::new(&grid, false);
        let mut used_starts = HashSet::new();
        let mut used_goals = HashSet::new();
        let mut agents = Vec::with_capacity(n);
        for a in 0..n {
            let mut placed = false;
            for _ in 0..50 {
                let s = free[rng.gen_range(0..free.len())];
                let g = free[rng.gen_range(0..free.len())];
                if s == g || used_starts.contains(&s) || used_goals.contains(&g) {
                    continue;
                }
                let (qs, qg) = (Configuration::from([s.0, s.1]), Configuration::from([g.0, g.1]));
                if reachable(&checker, a, &qs, &qg) {
                    used_starts.insert(s);
                    used_goals.insert(g);
                    agents.push(AgentDoc {
                        start: vec![s.0, s.1],
                        goal: vec![g.0, g.1],
                    });
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'attempt;
            }
        }
        return Ok(SceneDoc {
            name: None,
            domain: DomainKind::Grid,
            map: grid.rows(),
            thickness: None,
            substeps: None,
            arms: vec![],
            obstacles: vec![],
            agents,
        });
    }
    Err(GenerateError::Exhausted {
        kind: "corridor-grid",
        attempts: MAX_ATTEMPTS,
    })
}
