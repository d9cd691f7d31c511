//! Trial execution, CSV metrics, path dumps and the human-readable summary.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xcbs_core::postprocess::solution_motion;
use xcbs_core::search::{Horizon, Termination};
use xcbs_core::{
    default_benchmark_params, detect_conflicts, plan, shortcut_solution, CollisionChecker, Configuration, Domain, Path,
    PlanError, PlannerConfig, Solution, Variant,
};

use crate::generate::{GenerateError, GenerateSpec};
use crate::scene::{round9, Scene, SceneDoc, SceneError};

pub const CSV_HEADER: [&str; 11] = [
    "scene",
    "planner",
    "trial",
    "success",
    "time_s",
    "cost_steps",
    "cost_rad",
    "ct_expansions",
    "ll_expansions",
    "collision_checks",
    "cost_rad_post",
];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("{scene}: {source}")]
    Plan {
        scene: String,
        #[source]
        source: PlanError,
    },
    #[error("bad planner `{0}`")]
    Planner(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// A planner column: a label and the configuration it runs with.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannerSpec {
    pub label: String,
    pub config: PlannerConfig,
}

/// `NAME` or `NAME:key=value,...` with keys `w1`, `w2`, `wh`. Without
/// overrides the benchmark defaults for that variant apply.
impl FromStr for PlannerSpec {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RunError::Planner(s.to_string());
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let variant: Variant = name.trim().parse().map_err(|_| bad())?;
        let mut config = default_benchmark_params()
            .into_iter()
            .find(|c| c.variant == variant)
            .unwrap_or_else(|| PlannerConfig::for_variant(variant));
        let mut label = variant.name().to_string();
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(bad)?;
            let v: f64 = v.trim().parse().map_err(|_| bad())?;
            match k.trim() {
                "w1" => config.w1 = v,
                "w2" => config.w2 = v,
                "wh" => config.wh = v,
                _ => return Err(bad()),
            }
        }
        if !rest.is_empty() {
            label = format!("{label}({rest})");
        }
        config.validate().map_err(|_| bad())?;
        Ok(PlannerSpec { label, config })
    }
}

pub fn parse_planners(list: &str) -> Result<Vec<PlannerSpec>, RunError> {
    // Commas separate planners unless they sit inside an override list.
    let mut out = Vec::new();
    let mut current = String::new();
    for token in list.split(',') {
        let starts_planner = token.contains(':') || !token.contains('=');
        if !current.is_empty() && starts_planner {
            out.push(current.parse()?);
            current.clear();
        }
        if !current.is_empty() {
            current.push(',');
        }
        current.push_str(token.trim());
    }
    if !current.is_empty() {
        out.push(current.parse()?);
    }
    if out.is_empty() {
        return Err(RunError::Planner(list.to_string()));
    }
    Ok(out)
}

pub enum SceneSource {
    /// The same scene for every trial.
    Fixed(Scene),
    /// Trial `k` uses a scene generated with seed `seed + k`.
    Generated(GenerateSpec),
}

#[derive(Clone, Debug)]
pub struct RunSettings {
    pub trials: usize,
    pub timeout: Duration,
    pub seed: u64,
    pub use_cache: bool,
    pub termination: Option<Termination>,
    pub horizon: Option<Horizon>,
    /// Worker threads; 1 runs trials sequentially.
    pub jobs: usize,
    pub dump_dir: Option<PathBuf>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            trials: 1,
            timeout: Duration::from_secs(60),
            seed: 0,
            use_cache: true,
            termination: None,
            horizon: None,
            jobs: 1,
            dump_dir: None,
        }
    }
}

/// One CSV line. Cost fields are empty for failed trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scene: String,
    pub planner: String,
    pub trial: usize,
    pub success: bool,
    pub time_s: f64,
    pub cost_steps: Option<u32>,
    pub cost_rad: Option<f64>,
    pub ct_expansions: u64,
    pub ll_expansions: u64,
    pub collision_checks: u64,
    pub cost_rad_post: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrialResult {
    pub row: MetricsRow,
    pub shortcut_time: Duration,
    /// Path dump document for solved trials.
    pub dump: Option<String>,
}

impl PlannerSpec {
    fn effective(&self, settings: &RunSettings) -> PlannerConfig {
        let mut c = self
            .config
            .clone()
            .with_timeout(settings.timeout)
            .with_cache(settings.use_cache);
        if let Some(t) = settings.termination {
            c = c.with_termination(t);
        }
        if let Some(h) = settings.horizon {
            c = c.with_horizon(h);
        }
        c
    }
}

/// Runs one planner on one scene. Wall time covers only the planner call.
pub fn run_trial(
    scene: &Scene,
    planner: &PlannerSpec,
    trial: usize,
    settings: &RunSettings,
) -> Result<TrialResult, RunError> {
    let config = planner.effective(settings);
    let domain = scene.domain.as_dyn();
    let t0 = Instant::now();
    let outcome = plan(domain, &scene.starts, &scene.goals, &config);
    let elapsed = t0.elapsed();
    let outcome = outcome.map_err(|source| RunError::Plan {
        scene: scene.name.clone(),
        source,
    })?;
    let mut row = MetricsRow {
        scene: scene.name.clone(),
        planner: planner.label.clone(),
        trial,
        success: false,
        time_s: elapsed.as_secs_f64(),
        cost_steps: None,
        cost_rad: None,
        ct_expansions: outcome.stats.ct_expansions,
        ll_expansions: outcome.stats.ll_expansions,
        collision_checks: outcome.stats.collision_checks(),
        cost_rad_post: None,
    };
    let mut shortcut_time = Duration::ZERO;
    let mut dump = None;
    if let Some(sol) = outcome.solution.as_ref().filter(|_| outcome.is_solved()) {
        row.success = true;
        row.cost_steps = Some(sol.sum_of_costs);
        row.cost_rad = Some(round9(solution_motion(domain, sol)));
        let t1 = Instant::now();
        let (_, report) = shortcut_solution(sol, domain).map_err(|source| RunError::Plan {
            scene: scene.name.clone(),
            source,
        })?;
        shortcut_time = t1.elapsed();
        row.cost_rad_post = Some(round9(report.total_rad_after()));
        if settings.dump_dir.is_some() {
            dump = Some(path_dump(
                scene,
                planner,
                trial,
                sol,
                outcome.lower_bound,
                outcome.bound,
            ));
        }
    }
    Ok(TrialResult {
        row,
        shortcut_time,
        dump,
    })
}

/// All trials for every planner, ordered by trial then planner.
pub fn run_experiment(
    source: &SceneSource,
    planners: &[PlannerSpec],
    settings: &RunSettings,
) -> Result<Vec<TrialResult>, RunError> {
    let scenes: Vec<Scene> = match source {
        SceneSource::Fixed(s) => vec![s.clone()],
        SceneSource::Generated(spec) => (0..settings.trials)
            .map(|k| Ok(spec.generate(settings.seed.wrapping_add(k as u64))?.build()?))
            .collect::<Result<_, RunError>>()?,
    };
    let tasks: Vec<(usize, usize)> = (0..settings.trials)
        .flat_map(|t| (0..planners.len()).map(move |p| (t, p)))
        .collect();
    let run = |&(t, p): &(usize, usize)| {
        let scene = &scenes[t.min(scenes.len() - 1)];
        run_trial(scene, &planners[p], t, settings)
    };
    let results: Vec<Result<TrialResult, RunError>> = if settings.jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.jobs)
            .build()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        pool.install(|| tasks.par_iter().map(run).collect())
    } else {
        tasks.iter().map(run).collect()
    };
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = &settings.dump_dir {
        std::fs::create_dir_all(dir)?;
        for r in &results {
            if let Some(doc) = &r.dump {
                let file = format!("{}__{}__{}.toml", r.row.scene, sanitize(&r.row.planner), r.row.trial);
                std::fs::write(dir.join(file), doc)?;
            }
        }
    }
    Ok(results)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: impl IntoIterator<Item = MetricsRow>, out: W) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DumpResult {
    pub planner: String,
    pub trial: usize,
    pub sum_of_costs: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
    pub bound: f64,
}

/// One agent's path; each row is `[t, coords...]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DumpPath {
    pub agent: usize,
    pub rows: Vec<Vec<i64>>,
}

/// A solved trial: the scene, the result header and one time-indexed table
/// per agent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathDump {
    pub result: DumpResult,
    pub scene: SceneDoc,
    pub paths: Vec<DumpPath>,
}

pub fn path_dump(
    scene: &Scene,
    planner: &PlannerSpec,
    trial: usize,
    sol: &Solution,
    lower_bound: Option<f64>,
    bound: f64,
) -> String {
    let dump = PathDump {
        result: DumpResult {
            planner: planner.label.clone(),
            trial,
            sum_of_costs: sol.sum_of_costs,
            lower_bound: lower_bound.map(round9),
            bound: if bound.is_finite() { round9(bound) } else { bound },
        },
        scene: scene.doc.clone(),
        paths: sol
            .paths
            .iter()
            .enumerate()
            .map(|(agent, p)| DumpPath {
                agent,
                rows: p
                    .waypoints()
                    .iter()
                    .enumerate()
                    .map(|(t, q)| std::iter::once(t as i64).chain(q.iter().map(|&c| c as i64)).collect())
                    .collect(),
            })
            .collect(),
    };
    toml::to_string(&dump).expect("path dumps always serialize")
}

/// Re-reads a path dump and checks it is a valid, conflict-free solution
/// whose cost respects the recorded bound.
pub fn revalidate_dump(text: &str) -> Result<Solution, String> {
    let dump: PathDump = toml::from_str(text).map_err(|e| e.to_string())?;
    let scene = dump.scene.build().map_err(|e| e.to_string())?;
    if dump.paths.len() != scene.agents() {
        return Err(format!("{} paths for {} agents", dump.paths.len(), scene.agents()));
    }
    let mut paths = Vec::with_capacity(dump.paths.len());
    for (i, p) in dump.paths.iter().enumerate() {
        if p.agent != i {
            return Err(format!("path {i} is labelled agent {}", p.agent));
        }
        let mut wps = Vec::with_capacity(p.rows.len());
        for (t, row) in p.rows.iter().enumerate() {
            if row.first() != Some(&(t as i64)) {
                return Err(format!("agent {i}: row {t} has the wrong time"));
            }
            let coords: Vec<i32> = row[1..]
                .iter()
                .map(|&c| i32::try_from(c).map_err(|_| format!("agent {i}: coordinate {c} out of range")))
                .collect::<Result<_, _>>()?;
            wps.push(Configuration::new(&coords));
        }
        paths.push(Path::new(wps));
    }
    let domain = scene.domain.as_dyn();
    let checker = CollisionChecker::new(domain, false);
    for (i, p) in paths.iter().enumerate() {
        if p.first() != Some(&scene.starts[i]) || p.last() != Some(&scene.goals[i]) {
            return Err(format!("agent {i}: path does not connect its start and goal"));
        }
        if !checker.is_state_valid(i, &p.waypoints()[0]) {
            return Err(format!("agent {i}: invalid start"));
        }
        for w in p.waypoints().windows(2) {
            if !is_step(domain, i, &w[0], &w[1]) || !checker.is_motion_valid(i, &w[0], &w[1]) {
                return Err(format!("agent {i}: invalid step {} -> {}", w[0], w[1]));
            }
        }
    }
    if let Some(c) = detect_conflicts(&paths, &checker).first() {
        return Err(format!(
            "agents {} and {} collide at t = {}",
            c.agents.0, c.agents.1, c.time
        ));
    }
    let sol = Solution::new(paths);
    if sol.sum_of_costs != dump.result.sum_of_costs {
        return Err(format!(
            "recorded cost {} but paths cost {}",
            dump.result.sum_of_costs, sol.sum_of_costs
        ));
    }
    if let Some(lb) = dump.result.lower_bound {
        if f64::from(sol.sum_of_costs) > dump.result.bound * lb + 1e-6 {
            return Err(format!(
                "cost {} exceeds {} * {lb}",
                sol.sum_of_costs, dump.result.bound
            ));
        }
    }
    Ok(sol)
}

fn is_step(domain: &dyn Domain, agent: usize, from: &Configuration, to: &Configuration) -> bool {
    if from == to {
        return true;
    }
    let mut succ = Vec::new();
    domain.motion_primitives(agent, from, &mut succ);
    succ.contains(to)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanSd {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MeanSd::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        MeanSd {
            n,
            mean,
            sd: var.sqrt(),
        }
    }
}

impl fmt::Display for MeanSd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n == 0 {
            write!(f, "-")
        } else {
            write!(f, "{:.4} ± {:.4}", self.mean, self.sd)
        }
    }
}

pub fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    })
}

#[derive(Clone, Debug)]
pub struct PlannerSummary {
    pub planner: String,
    pub trials: usize,
    pub successes: usize,
    pub time_s: MeanSd,
    pub cost_steps: MeanSd,
    pub cost_rad: MeanSd,
    pub collision_checks: MeanSd,
    pub shortcut_s: MeanSd,
}

impl PlannerSummary {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

/// Median of per-trial ratios `planner / baseline` over trials both solved.
#[derive(Clone, Debug)]
pub struct PairedRatio {
    pub planner: String,
    pub baseline: String,
    pub mutual: usize,
    pub time: Option<f64>,
    pub checks: Option<f64>,
    pub cost_steps: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Summary {
    pub planners: Vec<PlannerSummary>,
    pub ratios: Vec<PairedRatio>,
}

pub fn summarize(results: &[TrialResult], planners: &[PlannerSpec]) -> Summary {
    fn by_planner<'a>(results: &'a [TrialResult], label: &'a str) -> impl Iterator<Item = &'a TrialResult> {
        results.iter().filter(move |r| r.row.planner == label)
    }
    let summaries = planners
        .iter()
        .map(|p| {
            let rows: Vec<&TrialResult> = by_planner(results, &p.label).collect();
            let ok: Vec<&TrialResult> = rows.iter().copied().filter(|r| r.row.success).collect();
            let col = |f: &dyn Fn(&TrialResult) -> f64| MeanSd::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            PlannerSummary {
                planner: p.label.clone(),
                trials: rows.len(),
                successes: ok.len(),
                time_s: col(&|r| r.row.time_s),
                cost_steps: col(&|r| f64::from(r.row.cost_steps.unwrap_or(0))),
                cost_rad: col(&|r| r.row.cost_rad.unwrap_or(0.0)),
                collision_checks: col(&|r| r.row.collision_checks as f64),
                shortcut_s: col(&|r| r.shortcut_time.as_secs_f64()),
            }
        })
        .collect();
    let mut ratios = Vec::new();
    if let Some(base) = planners.first() {
        let key = |r: &TrialResult| (r.row.scene.clone(), r.row.trial);
        let base_rows: HashMap<_, &TrialResult> = by_planner(results, &base.label)
            .filter(|r| r.row.success)
            .map(|r| (key(r), r))
            .collect();
        for p in &planners[1..] {
            let pairs: Vec<(&TrialResult, &TrialResult)> = by_planner(results, &p.label)
                .filter(|r| r.row.success)
                .filter_map(|r| base_rows.get(&key(r)).map(|b| (r, *b)))
                .collect();
            let ratio = |f: &dyn Fn(&TrialResult) -> f64| {
                let mut xs: Vec<f64> = pairs
                    .iter()
                    .filter(|(_, b)| f(b) > 0.0)
                    .map(|(a, b)| f(a) / f(b))
                    .collect();
                median(&mut xs)
            };
            ratios.push(PairedRatio {
                planner: p.label.clone(),
                baseline: base.label.clone(),
                mutual: pairs.len(),
                time: ratio(&|r| r.row.time_s),
                checks: ratio(&|r| r.row.collision_checks as f64),
                cost_steps: ratio(&|r| f64::from(r.row.cost_steps.unwrap_or(0))),
            });
        }
    }
    Summary {
        planners: summaries,
        ratios,
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.planners {
            writeln!(
                f,
                "{:<12} success {}/{} ({:.0}%)  time_s {}  cost_steps {}  cost_rad {}  checks {}  shortcut_s {}",
                p.planner,
                p.successes,
                p.trials,
                100.0 * p.success_rate(),
                p.time_s,
                p.cost_steps,
                p.cost_rad,
                p.collision_checks,
                p.shortcut_s
            )?;
        }
        let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        for r in &self.ratios {
            writeln!(
                f,
                "median ratio {}/{} over {} mutual successes: time {}  checks {}  cost_steps {}",
                r.planner,
                r.baseline,
                r.mutual,
                show(r.time),
                show(r.checks),
                show(r.cost_steps)
            )?;
        }
        Ok(())
    }
}
