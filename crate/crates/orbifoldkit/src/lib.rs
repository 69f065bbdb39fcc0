//! Scenario files for `orbifold-core`: a small declarative DSL, a sequential
//! runner and deterministic reports.

pub mod dsl;
pub mod runner;

pub use dsl::{parse, DslError, Scenario};
pub use runner::{run, run_file, to_json, CommandRecord, Options, ScenarioReport};
