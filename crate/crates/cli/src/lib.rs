//! Experiment harness for the sticky random walk: configuration, seeded instance
//! construction, solver runs with residual traces, and a dense-oracle validation suite.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod validate;

pub use config::{parse_seeds, ExperimentConfig, GraphKind, Mode, RewardSetting, Solver};
pub use experiment::{
    build_graph, build_instance, explain, grid_dims, run_experiment, ExperimentReport, RunFinal,
    SolverSummary, TraceRow,
};
pub use validate::{dense_value, relative_error, validate_suite, Check, ValidationReport};

/// Process exit status for an error: 2 for a hit iteration cap, 1 otherwise.
pub fn exit_code(err: &mdp_pagerank::Error) -> i32 {
    if err.is_convergence() {
        2
    } else {
        1
    }
}
