//! Calibration, budgeted training, cost sweeps and reporting.

mod config;
mod pipeline;
mod report;
mod run;
pub mod svg;

pub use config::{CostSpec, ExperimentConfig, Variant, DEFAULT_MULTIPLIERS};
pub use pipeline::{
    calibrate_cost, default_out_root, rerun_from_manifest, resolve_cost, run_cost_sweep, run_training, version_stamp,
    Artifact, ArtifactKind, Calibration, CalibrationRecord, CostRecord, CurveRow, FrontierRow, Manifest,
    MultiplierSummary, RngRecord, RunKind, SweepCell, SweepResult, SweepRow, TrainingResult, RANDOM_SCORE_EPISODES,
};
pub use report::emit_report;
pub use run::{random_policy_score, train_run, CurvePoint, EpisodeLog, RunOutput, RunSpec, RunSummary};
