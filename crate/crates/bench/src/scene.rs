//! Textual scene documents (TOML) and their conversion to planning domains.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xcbs_core::{
    Arm, ArmDomain, CollisionChecker, Configuration, Domain, GridDomain, Obstacle, PairwiseCollision, Point2,
};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> SceneError {
    SceneError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Grid,
    Arm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmDoc {
    pub base: [f64; 2],
    #[serde(default)]
    pub base_angle: f64,
    pub link_lengths: Vec<f64>,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// Per-joint `[lo, hi]` index range; `±floor(π / resolution)` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<Vec<[i32; 2]>>,
}

fn default_resolution() -> f64 {
    PI / 16.0
}

/// Exactly one of `segment = [x0, y0, x1, y1]` or `disc = [x, y, r]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disc: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDoc {
    pub start: Vec<i32>,
    pub goal: Vec<i32>,
}

/// Serialized scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub domain: DomainKind,
    /// Grid rows, `.` free and `#` blocked; row `y` is the `y`-th string.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub map: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substeps: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub arms: Vec<ArmDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<ObstacleDoc>,
    pub agents: Vec<AgentDoc>,
}

pub const DEFAULT_THICKNESS: f64 = 0.05;

/// Rounds to 9 fractional digits, the precision of the textual format.
pub fn round9(x: f64) -> f64 {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl SceneDoc {
    pub fn from_toml(text: &str) -> Result<Self, SceneError> {
        let mut doc: SceneDoc = toml::from_str(text)?;
        doc.normalize();
        Ok(doc)
    }

    pub fn to_toml(&self) -> String {
        let mut doc = self.clone();
        doc.normalize();
        toml::to_string(&doc).expect("scene documents always serialize")
    }

    /// Rounds every geometric number to the format precision.
    pub fn normalize(&mut self) {
        self.thickness = self.thickness.map(round9);
        for arm in &mut self.arms {
            arm.base = arm.base.map(round9);
            arm.base_angle = round9(arm.base_angle);
            arm.resolution = round9(arm.resolution);
            arm.link_lengths.iter_mut().for_each(|l| *l = round9(*l));
        }
        for o in &mut self.obstacles {
            o.segment = o.segment.map(|s| s.map(round9));
            o.disc = o.disc.map(|d| d.map(round9));
        }
    }

    /// Builds and validates the domain and endpoints.
    pub fn build(&self) -> Result<Scene, SceneError> {
        let domain = match self.domain {
            DomainKind::Grid => {
                if self.map.is_empty() {
                    return Err(invalid("map", "grid scenes need at least one row"));
                }
                let grid = GridDomain::from_rows(&self.map).map_err(|e| invalid("map", e.to_string()))?;
                SceneDomain::Grid(grid)
            }
            DomainKind::Arm => SceneDomain::Arm(self.build_arm_domain()?),
        };
        if self.agents.is_empty() {
            return Err(invalid("agents", "at least one agent is required"));
        }
        if let SceneDomain::Arm(d) = &domain {
            if d.arms.len() != self.agents.len() {
                return Err(invalid(
                    "agents",
                    format!("{} agents for {} arms", self.agents.len(), d.arms.len()),
                ));
            }
        }
        let starts: Vec<Configuration> = self.agents.iter().map(|a| Configuration::new(&a.start)).collect();
        let goals: Vec<Configuration> = self.agents.iter().map(|a| Configuration::new(&a.goal)).collect();
        let scene = Scene {
            name: self.name.clone().unwrap_or_else(|| "scene".into()),
            domain,
            starts,
            goals,
            doc: self.clone(),
        };
        scene.check_endpoints()?;
        Ok(scene)
    }

    pub fn build_arm_domain(&self) -> Result<ArmDomain<f64>, SceneError> {
        if self.arms.is_empty() {
            return Err(invalid("arms", "arm scenes need at least one arm"));
        }
        let thickness = self.thickness.unwrap_or(DEFAULT_THICKNESS);
        if !(thickness.is_finite() && thickness >= 0.0) {
            return Err(invalid("thickness", "must be a finite non-negative number"));
        }
        let mut arms = Vec::with_capacity(self.arms.len());
        for (i, a) in self.arms.iter().enumerate() {
            let field = |f: &str| format!("arms[{i}].{f}");
            if a.link_lengths.is_empty() || a.link_lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(invalid(field("link_lengths"), "need one or more positive lengths"));
            }
            if !(a.resolution.is_finite() && a.resolution > 0.0) {
                return Err(invalid(field("resolution"), "must be positive"));
            }
            if a.base.iter().chain([&a.base_angle]).any(|x| !x.is_finite()) {
                return Err(invalid(field("base"), "must be finite"));
            }
            let mut arm = Arm::new(Point2::new(a.base[0], a.base[1]), a.link_lengths.clone(), a.resolution)
                .with_base_angle(a.base_angle);
            if let Some(limits) = &a.limits {
                if limits.len() != a.link_lengths.len() || limits.iter().any(|[lo, hi]| lo > hi) {
                    return Err(invalid(
                        field("limits"),
                        "need one [lo, hi] pair with lo <= hi per joint",
                    ));
                }
                arm = arm.with_limits(limits.iter().map(|[lo, hi]| (*lo, *hi)).collect());
            }
            arms.push(arm);
        }
        let mut obstacles = Vec::with_capacity(self.obstacles.len());
        for (i, o) in self.obstacles.iter().enumerate() {
            let obstacle = match (o.segment, o.disc) {
                (Some([x0, y0, x1, y1]), None) => Obstacle::Segment(Point2::new(x0, y0), Point2::new(x1, y1)),
                (None, Some([x, y, r])) if r >= 0.0 => Obstacle::Disc {
                    center: Point2::new(x, y),
                    radius: r,
                },
                _ => {
                    return Err(invalid(
                        format!("obstacles[{i}]"),
                        "need exactly one of `segment = [4 numbers]` or `disc = [x, y, r >= 0]`",
                    ))
                }
            };
            obstacles.push(obstacle);
        }
        let mut d = ArmDomain::new(arms, obstacles, thickness);
        if let Some(s) = self.substeps {
            if s == 0 {
                return Err(invalid("substeps", "must be positive"));
            }
            d = d.with_substeps(s);
        }
        Ok(d)
    }
}

#[derive(Clone, Debug)]
pub enum SceneDomain {
    Grid(GridDomain),
    Arm(ArmDomain<f64>),
}

impl SceneDomain {
    pub fn kind(&self) -> DomainKind {
        match self {
            SceneDomain::Grid(_) => DomainKind::Grid,
            SceneDomain::Arm(_) => DomainKind::Arm,
        }
    }

    pub fn as_dyn(&self) -> &dyn Domain {
        match self {
            SceneDomain::Grid(g) => g,
            SceneDomain::Arm(a) => a,
        }
    }
}

/// A validated planning instance.
#[derive(Clone, Debug)]
pub struct Scene {
    pub name: String,
    pub domain: SceneDomain,
    pub starts: Vec<Configuration>,
    pub goals: Vec<Configuration>,
    /// Document the scene was built from.
    pub doc: SceneDoc,
}

impl fmt::Display for Scene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({:?}, {} agents)",
            self.name,
            self.domain.kind(),
            self.starts.len()
        )
    }
}

impl Scene {
    pub fn parse(text: &str) -> Result<Scene, SceneError> {
        SceneDoc::from_toml(text)?.build()
    }

    pub fn load(path: &std::path::Path) -> Result<Scene, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut doc = SceneDoc::from_toml(&text)?;
        if doc.name.is_none() {
            doc.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        doc.build()
    }

    pub fn agents(&self) -> usize {
        self.starts.len()
    }

    fn check_endpoints(&self) -> Result<(), SceneError> {
        let domain = self.domain.as_dyn();
        let checker = CollisionChecker::new(domain, false);
        for (i, (s, g)) in self.starts.iter().zip(&self.goals).enumerate() {
            for (what, q) in [("start", s), ("goal", g)] {
                let field = format!("agents[{i}].{what}");
                let dim = domain.dimension(i);
                if q.dim() != dim {
                    return Err(invalid(field, format!("expected {dim} coordinates, got {}", q.dim())));
                }
                if !domain.in_bounds(i, q) {
                    return Err(invalid(field, format!("{q} is out of bounds")));
                }
                if !checker.is_state_valid(i, q) {
                    return Err(invalid(field, format!("{q} collides with the environment")));
                }
            }
        }
        for (what, qs) in [("start", &self.starts), ("goal", &self.goals)] {
            for j in 1..qs.len() {
                if let Some(i) = (0..j).find(|&i| checker.vertex_collision(i, &qs[i], j, &qs[j])) {
                    return Err(invalid(
                        format!("agents[{j}].{what}"),
                        format!("collides with agent {i}'s {what}"),
                    ));
                }
            }
        }
        Ok(())
    }
}
