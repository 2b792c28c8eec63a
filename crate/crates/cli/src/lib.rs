//! Command-line harness: world generation, single missions, batch
//! experiments, and standalone planner runs with replayable file outputs.

// Validation guards use `!(x > 0.0)` on purpose: it rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

pub use commands::{
    cmd_gen_world, cmd_plan_path, cmd_plan_route, cmd_run_batch, cmd_run_mission,
    load_or_generate_world, BatchSummary, TrialRow, World, EXIT_CONFIG, EXIT_OK, EXIT_STRANDED,
    EXIT_TIMED_OUT,
};
pub use config::ExperimentConfig;
