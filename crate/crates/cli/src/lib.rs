//! Batch experiment harness: scenario files, bundled presets, sweeps over
//! powers and array sizes, and CSV/JSON result tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod scenario;
pub mod selftest;
pub mod table;

pub use error::{CliError, CliResult};
pub use scenario::{Scenario, ScenarioFile};
pub use table::ResultTable;
