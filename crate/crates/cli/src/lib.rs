//! Batch front end: scenario runners, parameter sweeps, the validation
//! suite, and CSV/JSON emission.

pub mod manifest;
pub mod output;
pub mod runner;
pub mod validation;

pub use manifest::{CouplingProfile, ManifestError, OutputFormat, RunManifest, ScenarioKind, SweepAxis};
pub use output::ResultTable;
pub use runner::{run_scenario, RunError};
pub use validation::{run_validation, ValidationOptions, ValidationReport};
