//! Experiment orchestration: scenarios and profiles read from flat config
//! files, the four reference curves of a transfer study, epoch and data
//! savings, transfer-direction tables and scenario-matrix sweeps.

mod config;
mod scenario;
mod study;
mod sweep;

pub use config::KvConfig;
pub use scenario::{default_strategy, fiber_by_name, fiber_name, Profile, Scenario};
pub use study::{
    best_effective_q, compute_savings, effective_q, epoch_savings_pct, epochs_to_threshold, median_ranked,
    run_direction_study, run_reference_curves, DirectionRow, FrameRole, Lab, ReferenceCurves, SavingsReport,
    SavingsRow, ScenarioData, TLExperiment,
};
pub use sweep::{run_scenario_matrix, summary_csv, MatrixRow, SummaryRow, SummaryValues, SweepConfig, SUMMARY_HEADER};
