//! Planar multi-link arms on a joint-angle lattice.
//!
//! Each agent is a serial chain of links rooted at a fixed base. Joint `j` at
//! lattice index `k` sits at `k * resolution` radians relative to the previous
//! link (the first joint is relative to the base heading). Links are capsules
//! of radius `thickness`; obstacles are zero-width segments and discs.
//!
//! Motions are straight lines in joint space. Their validity is decided by
//! sampling `substeps` interpolated configurations per lattice step of the
//! largest joint displacement; inter-agent sweeps sample both agents at the
//! same interpolation parameter.

use smallvec::SmallVec;

use super::geometry::{point_segment_distance, segment_distance, Point2};
use super::Domain;
use crate::error::DomainError;
use crate::model::{AgentId, Configuration};
use crate::scalar::Real;

type Chain<T> = SmallVec<[Point2<T>; 8]>;

pub const DEFAULT_SUBSTEPS: u32 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Arm<T> {
    pub base: Point2<T>,
    /// Heading of joint index zero of the first joint, radians.
    pub base_angle: T,
    pub link_lengths: Vec<T>,
    /// Radians per lattice step.
    pub resolution: T,
    /// Inclusive joint index limits, one pair per joint.
    pub limits: Vec<(i32, i32)>,
}

impl<T: Real> Arm<T> {
    /// Arm with joint limits of `±π` rounded down to whole lattice steps.
    pub fn new(base: Point2<T>, link_lengths: Vec<T>, resolution: T) -> Self {
        let pi = T::from_f64_lossy(std::f64::consts::PI);
        let steps = ((pi / resolution) + T::from_f64_lossy(1e-6))
            .floor()
            .to_i32()
            .unwrap_or(0);
        let limits = vec![(-steps, steps); link_lengths.len()];
        Arm {
            base,
            base_angle: T::zero(),
            link_lengths,
            resolution,
            limits,
        }
    }

    pub fn with_base_angle(mut self, angle: T) -> Self {
        self.base_angle = angle;
        self
    }

    pub fn with_limits(mut self, limits: Vec<(i32, i32)>) -> Self {
        self.limits = limits;
        self
    }

    pub fn joints(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn reach(&self) -> T {
        self.link_lengths.iter().fold(T::zero(), |a, &l| a + l)
    }

    /// Base followed by every joint position for relative joint angles in
    /// radians.
    fn chain_from_angles(&self, angle: impl Fn(usize) -> T, out: &mut Chain<T>) {
        out.clear();
        let mut p = self.base;
        let mut heading = self.base_angle;
        out.push(p);
        for (j, &len) in self.link_lengths.iter().enumerate() {
            heading = heading + angle(j);
            p = p + Point2::polar(len, heading);
            out.push(p);
        }
    }

    fn chain_at(&self, from: &Configuration, to: &Configuration, s: T, out: &mut Chain<T>) {
        let res = self.resolution;
        self.chain_from_angles(
            |j| {
                let a = T::from_i64_lossy(from[j] as i64);
                let b = T::from_i64_lossy(to[j] as i64);
                (a + (b - a) * s) * res
            },
            out,
        );
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Obstacle<T> {
    Segment(Point2<T>, Point2<T>),
    Disc { center: Point2<T>, radius: T },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArmDomain<T> {
    pub arms: Vec<Arm<T>>,
    pub obstacles: Vec<Obstacle<T>>,
    /// Capsule radius of every link.
    pub thickness: T,
    /// Interpolated samples per lattice step of joint motion.
    pub substeps: u32,
}

impl<T: Real> ArmDomain<T> {
    pub fn new(arms: Vec<Arm<T>>, obstacles: Vec<Obstacle<T>>, thickness: T) -> Self {
        ArmDomain {
            arms,
            obstacles,
            thickness,
            substeps: DEFAULT_SUBSTEPS,
        }
    }

    pub fn with_substeps(mut self, substeps: u32) -> Self {
        self.substeps = substeps.max(1);
        self
    }

    pub fn arm(&self, agent: AgentId) -> Result<&Arm<T>, DomainError> {
        self.arms.get(agent).ok_or(DomainError::UnknownAgent(agent))
    }

    fn check_limits(&self, agent: AgentId, q: &Configuration) -> Result<&Arm<T>, DomainError> {
        let arm = self.arm(agent)?;
        if q.dim() != arm.joints() {
            return Err(DomainError::Dimension {
                agent,
                got: q.dim(),
                expected: arm.joints(),
            });
        }
        for (joint, (&index, &(lo, hi))) in q.iter().zip(arm.limits.iter()).enumerate() {
            if index < lo || index > hi {
                return Err(DomainError::OutOfLimits {
                    agent,
                    joint,
                    index,
                    lo,
                    hi,
                });
            }
        }
        Ok(arm)
    }

    /// Joint positions (base excluded) of `agent` at lattice configuration `q`.
    pub fn forward_kinematics(&self, agent: AgentId, q: &Configuration) -> Result<Vec<Point2<T>>, DomainError> {
        let arm = self.check_limits(agent, q)?;
        let mut chain = Chain::new();
        arm.chain_at(q, q, T::zero(), &mut chain);
        Ok(chain[1..].to_vec())
    }

    /// Joint positions (base excluded) for arbitrary relative joint angles in
    /// radians.
    pub fn joint_positions(&self, agent: AgentId, angles: &[T]) -> Result<Vec<Point2<T>>, DomainError> {
        let arm = self.arm(agent)?;
        if angles.len() != arm.joints() {
            return Err(DomainError::Dimension {
                agent,
                got: angles.len(),
                expected: arm.joints(),
            });
        }
        let mut chain = Chain::new();
        arm.chain_from_angles(|j| angles[j], &mut chain);
        Ok(chain[1..].to_vec())
    }

    /// Number of interpolation intervals for a motion whose largest joint
    /// displacement is `steps` lattice steps.
    pub fn intervals(&self, steps: u32) -> u32 {
        self.substeps * steps.max(1)
    }

    fn chain_free(&self, chain: &Chain<T>) -> bool {
        let t = self.thickness;
        let two_t = t + t;
        let links = chain.len() - 1;
        for l in 0..links {
            let (a, b) = (chain[l], chain[l + 1]);
            for obs in &self.obstacles {
                let hit = match *obs {
                    Obstacle::Segment(c, d) => segment_distance(a, b, c, d) < t,
                    Obstacle::Disc { center, radius } => point_segment_distance(center, a, b) < radius + t,
                };
                if hit {
                    return false;
                }
            }
            for m in l + 2..links {
                if segment_distance(a, b, chain[m], chain[m + 1]) < two_t {
                    return false;
                }
            }
        }
        true
    }

    fn chains_overlap(&self, ca: &Chain<T>, cb: &Chain<T>) -> bool {
        let two_t = self.thickness + self.thickness;
        for l in 0..ca.len() - 1 {
            for m in 0..cb.len() - 1 {
                if segment_distance(ca[l], ca[l + 1], cb[m], cb[m + 1]) < two_t {
                    return true;
                }
            }
        }
        false
    }

    /// Agents too far apart to ever touch.
    fn out_of_reach(&self, a: AgentId, b: AgentId) -> bool {
        let (arm_a, arm_b) = (&self.arms[a], &self.arms[b]);
        let limit = arm_a.reach() + arm_b.reach() + self.thickness + self.thickness;
        arm_a.base.distance(arm_b.base) > limit
    }
}

impl<T: Real> Domain for ArmDomain<T> {
    fn agent_count(&self) -> Option<usize> {
        Some(self.arms.len())
    }

    fn dimension(&self, agent: AgentId) -> usize {
        self.arms.get(agent).map(Arm::joints).unwrap_or(0)
    }

    fn in_bounds(&self, agent: AgentId, q: &Configuration) -> bool {
        self.check_limits(agent, q).is_ok()
    }

    fn motion_primitives(&self, agent: AgentId, q: &Configuration, out: &mut Vec<Configuration>) {
        let Some(arm) = self.arms.get(agent) else {
            return;
        };
        for (j, &(lo, hi)) in arm.limits.iter().enumerate() {
            if q[j] < hi {
                out.push(q.offset(j, 1));
            }
            if q[j] > lo {
                out.push(q.offset(j, -1));
            }
        }
    }

    fn state_free(&self, agent: AgentId, q: &Configuration) -> bool {
        let arm = &self.arms[agent];
        let mut chain = Chain::new();
        arm.chain_at(q, q, T::zero(), &mut chain);
        self.chain_free(&chain)
    }

    fn segment_free(&self, agent: AgentId, from: &Configuration, to: &Configuration) -> bool {
        let steps = from.linf(to);
        if steps == 0 {
            return true;
        }
        let arm = &self.arms[agent];
        // sample from the lexicographically smaller endpoint so that the
        // decision is bit-identical in both directions
        let (from, to) = if from <= to { (from, to) } else { (to, from) };
        let n = self.intervals(steps);
        let inv = T::one() / T::from_i64_lossy(n as i64);
        let mut chain = Chain::new();
        (1..n).all(|k| {
            arm.chain_at(from, to, T::from_i64_lossy(k as i64) * inv, &mut chain);
            self.chain_free(&chain)
        })
    }

    fn bodies_overlap(&self, a: AgentId, qa: &Configuration, b: AgentId, qb: &Configuration) -> bool {
        if self.out_of_reach(a, b) {
            return false;
        }
        let (mut ca, mut cb) = (Chain::new(), Chain::new());
        self.arms[a].chain_at(qa, qa, T::zero(), &mut ca);
        self.arms[b].chain_at(qb, qb, T::zero(), &mut cb);
        self.chains_overlap(&ca, &cb)
    }

    fn sweeps_overlap(
        &self,
        a: AgentId,
        from_a: &Configuration,
        to_a: &Configuration,
        b: AgentId,
        from_b: &Configuration,
        to_b: &Configuration,
    ) -> bool {
        let steps = from_a.linf(to_a).max(from_b.linf(to_b));
        if steps == 0 || self.out_of_reach(a, b) {
            return false;
        }
        let n = self.intervals(steps);
        let inv = T::one() / T::from_i64_lossy(n as i64);
        let (mut ca, mut cb) = (Chain::new(), Chain::new());
        (1..n).any(|k| {
            let s = T::from_i64_lossy(k as i64) * inv;
            self.arms[a].chain_at(from_a, to_a, s, &mut ca);
            self.arms[b].chain_at(from_b, to_b, s, &mut cb);
            self.chains_overlap(&ca, &cb)
        })
    }

    /// Joint-space L2 distance in radians divided by the largest single
    /// primitive displacement (one lattice step).
    fn heuristic(&self, agent: AgentId, q: &Configuration, goal: &Configuration) -> f64 {
        let res = self.arms[agent].resolution.to_f64_lossy();
        let l2: f64 = q
            .iter()
            .zip(goal.iter())
            .map(|(a, b)| {
                let d = (*a - *b) as f64 * res;
                d * d
            })
            .sum::<f64>()
            .sqrt();
        l2 / res
    }

    fn motion_scale(&self, agent: AgentId) -> f64 {
        self.arms[agent].resolution.to_f64_lossy()
    }

    fn lattice_size(&self, agent: AgentId) -> usize {
        self.arms[agent].limits.iter().fold(1usize, |acc, &(lo, hi)| {
            acc.saturating_mul((hi - lo + 1).max(0) as usize)
        })
    }

    fn max_branching(&self, agent: AgentId) -> usize {
        2 * self.dimension(agent) + 1
    }
}
