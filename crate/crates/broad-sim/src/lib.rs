//! Experiment harness around the placement solvers: scenario generation,
//! fixed-position baselines, parameter sweeps, machine-readable output, and
//! the command-line interface.

pub mod baselines;
pub mod cli;
pub mod config;
pub mod emit;
pub mod planfile;
pub mod scenario;
pub mod sweep;

pub use baselines::{baseline_center_fixed, baseline_grid_search};
pub use emit::{emit_results, parse_results, results_to_string, OutputFormat};
pub use scenario::{default_experiment_config, generate_scenario, Scenario, ScenarioSpec};
pub use sweep::{
    run_algorithm, run_sweep, solve_broad, Algorithm, SweepOptions, SweepSpec, SweepVariable,
    TrialResult,
};
