//! Configuration documents, the shipped scenario catalogue, experiment and
//! convergence-study drivers, and delimited-text output.

mod assemble;
mod config;
mod driver;
mod experiment;
mod output;
mod schema;
mod validate;

pub use config::*;
pub use driver::{convergence_study, fit_order, run_experiment, RunOptions, RunSummary, StudyResult};
pub use experiment::{evaluate_level, reference_run, Contract, LevelOutcome};
pub use output::write_atomic;

use crate::{Error, Result};

/// Shipped scenarios as `(name, document)`.
pub const CATALOGUE: &[(&str, &str)] = &[
    ("static-steady", include_str!("../../scenarios/static-steady.json")),
    ("static-closed", include_str!("../../scenarios/static-closed.json")),
    ("piston-expansion", include_str!("../../scenarios/piston-expansion.json")),
    ("piston-compression", include_str!("../../scenarios/piston-compression.json")),
    ("piston-mms", include_str!("../../scenarios/piston-mms.json")),
    ("dilation-square", include_str!("../../scenarios/dilation-square.json")),
    ("dilation-transport", include_str!("../../scenarios/dilation-transport.json")),
    ("rotation-disk", include_str!("../../scenarios/rotation-disk.json")),
    ("twin-static", include_str!("../../scenarios/twin-static.json")),
    ("twin-piston", include_str!("../../scenarios/twin-piston.json")),
    ("twin-piston-perturbed", include_str!("../../scenarios/twin-piston-perturbed.json")),
    ("twin-dilation", include_str!("../../scenarios/twin-dilation.json")),
];

/// Parsed configuration of a shipped scenario.
pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let (_, doc) = CATALOGUE
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Precondition(format!("no shipped scenario named {name}")))?;
    parse_config(doc)
}

/// A shipped scenario by name, or a configuration file by path.
pub fn load(name_or_path: &str) -> Result<ScenarioConfig> {
    if CATALOGUE.iter().any(|(n, _)| *n == name_or_path) {
        return builtin(name_or_path);
    }
    parse_config(&std::fs::read_to_string(name_or_path)?)
}

#[cfg(test)]
mod tests;
