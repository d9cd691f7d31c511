//! Benchmark harness: scene files, scene generators and the experiment
//! runner behind the `xcbs-bench` binary.

pub mod generate;
pub mod runner;
pub mod scene;

pub use generate::{GenerateError, GenerateSpec};
pub use runner::{run_experiment, run_trial, MetricsRow, PlannerSpec, RunError, RunSettings, SceneSource, CSV_HEADER};
pub use scene::{Scene, SceneDoc, SceneError};
