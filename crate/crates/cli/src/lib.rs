//! Scenario runner for `host-core`: TOML scenarios, CSV and SVG artifacts,
//! calibration reports and re-verification of exported runs.

pub mod builtin;
pub mod config;
pub mod error;
pub mod export;
pub mod plot;
pub mod report;
pub mod run;

pub use builtin::{builtin, builtin_scenarios};
pub use config::ScenarioConfig;
pub use error::{CliError, Result};
pub use export::{export_csv, read_csv};
pub use plot::{emit_plot, Channel};
pub use report::calibration_report;
pub use run::{run_scenario, verify_csv, CheckOutcome, Manifest};
