//! Experiment configuration, closed-loop simulation, two-stage tuning and
//! artifact export.

pub mod config;
pub mod export;
pub mod pareto;
pub mod plot;
pub mod simulate;
pub mod trajectory;
pub mod tune;

pub use config::{ControlScheme, ExperimentConfig, MotorSpec, StageOneConfig, TuningConfig};
pub use export::{export_tune, read_pareto, read_trace, RunManifest};
pub use pareto::{rerank, ParetoRecord, RankedRecord};
pub use simulate::{evaluate_candidate, fitness_of, run_simulation, Simulator};
pub use trajectory::{LoadProfile, Reference, Trajectory};
pub use tune::{tune, tune_inner_loops, InnerTuning, TuneOutcome};
