//! Experiment orchestration: configs, seeded training loops, grid search,
//! optimizer comparisons, gain sweeps and regret replays.

pub mod analyze;
pub mod compare;
pub mod config;
pub mod grid;
pub mod regret_run;
pub mod run;

pub use analyze::analyze_cmd;
pub use compare::{compare_optimizers, iterations_to_target, CompareSummary, Comparison};
pub use config::{example_config, BoxSpec, CsvSpec, Model, ProblemSpec, QuadSpec, ResolvedRun, RunConfig, StepDrop, SyntheticSpec};
pub use grid::{grid_search, GridEntry, GridResult, Selection};
pub use regret_run::{run_regret, BoundTally, RegretOutcome};
pub use run::{
    require_converged, run_experiment, run_in_memory, smoothed, train_loop, AbortRecord, MetricsRow, MetricsWriter,
    RunArtifacts, RunMetadata, RunOutcome, StepView, METADATA_FILE, METRICS_FILE,
};
