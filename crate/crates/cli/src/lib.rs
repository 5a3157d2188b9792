//! Scenario-driven front end for the `lieflow` simulator.

pub mod error;
pub mod output;
pub mod presets;
pub mod run;
pub mod scenario;
pub mod verify;

pub use error::CliError;
pub use run::{execute, run, RunReport, Status};
pub use scenario::{parse_scenario, Scenario};
