use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{ArgGroup, Parser, ValueEnum};
use xcbs_bench::runner::{parse_planners, summarize, write_csv};
use xcbs_bench::{run_experiment, GenerateSpec, RunError, RunSettings, Scene, SceneSource};
use xcbs_core::search::{Horizon, Termination};

const EXIT_USAGE: u8 = 1;
const EXIT_SCENE: u8 = 2;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TerminationArg {
    Simple,
    PathAware,
}

/// Runs multi-agent planners on scenes and writes per-trial CSV metrics.
#[derive(Debug, Parser)]
#[command(name = "xcbs-bench", version)]
#[command(group(ArgGroup::new("input").required(true).args(["scene", "generate"])))]
struct Cli {
    /// Scene file (TOML).
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Generated scenes, `kind:key=value,...` (circle-arms, corridor-grid,
    /// shelf-lite). Trial k uses seed + k.
    #[arg(long)]
    generate: Option<String>,
    /// Comma-separated planners, optionally `NAME:w1=..,w2=..,wh=..`.
    #[arg(long, default_value = "CBS,xCBS,ECBS,xECBS,PP")]
    planners: String,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Per-trial budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for solved path dumps.
    #[arg(long)]
    dump_paths: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "on")]
    cache: Switch,
    /// Override the low-level experience termination rule.
    #[arg(long, value_enum)]
    termination: Option<TerminationArg>,
    /// Fixed last timestep instead of the automatic horizon.
    #[arg(long)]
    horizon: Option<u32>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Print the scene of trial 0 as TOML and exit.
    #[arg(long)]
    emit_scene: bool,
    /// Skip the summary on stderr.
    #[arg(long)]
    quiet: bool,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn run_error(e: RunError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        RunError::Scene(_) | RunError::Generate(_) | RunError::Plan { .. } => ExitCode::from(EXIT_SCENE),
        _ => ExitCode::from(EXIT_USAGE),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let planners = match parse_planners(&cli.planners) {
        Ok(p) => p,
        Err(e) => return usage(e),
    };
    if cli.trials == 0 || cli.jobs == 0 {
        return usage("--trials and --jobs must be positive");
    }
    if !(cli.timeout.is_finite() && cli.timeout > 0.0) {
        return usage("--timeout must be a positive number of seconds");
    }
    let source = if let Some(spec) = &cli.generate {
        match spec.parse::<GenerateSpec>() {
            Ok(s) => SceneSource::Generated(s),
            Err(e) => return usage(e),
        }
    } else {
        let path = cli.scene.as_ref().expect("clap enforces one input");
        match Scene::load(path) {
            Ok(s) => SceneSource::Fixed(s),
            Err(e) => return run_error(e.into()),
        }
    };
    if cli.emit_scene {
        let doc = match &source {
            SceneSource::Fixed(s) => s.doc.to_toml(),
            SceneSource::Generated(g) => match g.generate(cli.seed) {
                Ok(d) => d.to_toml(),
                Err(e) => return run_error(e.into()),
            },
        };
        print!("{doc}");
        return ExitCode::SUCCESS;
    }
    let settings = RunSettings {
        trials: cli.trials,
        timeout: Duration::from_secs_f64(cli.timeout),
        seed: cli.seed,
        use_cache: matches!(cli.cache, Switch::On),
        termination: cli.termination.map(|t| match t {
            TerminationArg::Simple => Termination::Simple,
            TerminationArg::PathAware => Termination::PathAware,
        }),
        horizon: cli.horizon.map(Horizon::Fixed),
        jobs: cli.jobs,
        dump_dir: cli.dump_paths.clone(),
    };
    let results = match run_experiment(&source, &planners, &settings) {
        Ok(r) => r,
        Err(e) => return run_error(e),
    };
    let rows = results.iter().map(|r| r.row.clone());
    let written = match &cli.out {
        Some(path) => File::create(path)
            .map_err(RunError::from)
            .and_then(|f| write_csv(rows, BufWriter::new(f))),
        None => write_csv(rows, io::stdout().lock()),
    };
    if let Err(e) = written {
        return run_error(e);
    }
    if !cli.quiet {
        let _ = write!(io::stderr(), "{}", summarize(&results, &planners));
    }
    ExitCode::SUCCESS
}
