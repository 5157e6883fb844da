//! Monte Carlo experiments: scenarios, strategies, sweeps and result files.

mod config;
mod results;
mod run;
mod scenario;
mod strategy;
mod sweep;

pub use config::{load_scenario, parse_scenario};
pub use results::{format_significant, read_results, write_results, ExperimentResult, ResultRow, CSV_HEADER};
pub use run::{check_compatible, decide, error_rate, run_sweep, run_trial, run_trials};
pub use scenario::{describe, preset, scenario_presets, Scenario, TaskGroup, WorkerModel};
pub use strategy::{Allocator, Decider, StrategySpec, ALLOCATOR_TOKENS, DECIDER_TOKENS};
pub use sweep::Sweep;
