//! Scenario files, result export and the command-line driver.

mod app;
pub mod config;
pub mod export;
mod scenario;

pub use app::run_command;
pub use config::{load_config, parse_config, Mode, Scenario};
pub use export::{export_field, Format};
pub use scenario::{prepare, run_check, run_forward, CheckResult, Prepared};
