//! Semantic CHSH Bell-test harness: trial orchestration over agent
//! backends, append-only sweep persistence, store analysis, report
//! emission, and the synthetic validation suites behind the CLI.

pub mod analyze;
pub mod config;
pub mod engine;
pub mod report;
pub mod store;
pub mod suites;

pub use analyze::Analysis;
pub use config::{ConfigError, RunConfig};
pub use engine::{run_grid, run_trial, EngineError, EngineOptions, ProgressEvent};
pub use store::{load_store, ParseMode, StoreError, TrialFilter, TrialStore};
