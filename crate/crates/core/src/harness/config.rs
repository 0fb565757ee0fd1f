use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// An analytic expression, written as a string or a bare number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprText {
    Number(f64),
    Text(String),
}

impl ExprText {
    pub fn source(&self) -> String {
        match self {
            ExprText::Number(v) => format!("{v:?}"),
            ExprText::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Interval,
    Rectangle,
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cells {
    One(usize),
    Two([usize; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JiggleConfig {
    pub amplitude: f64,
    #[serde(default = "one")]
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    pub shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub cells: Cells,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jiggle: Option<JiggleConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotionName {
    #[default]
    Static,
    Translation,
    Dilation,
    Rotation,
    Piston,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionConfig {
    #[serde(default)]
    pub kind: MotionName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<ExprText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<ExprText>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidConfig {
    pub gamma: f64,
    #[serde(default = "one")]
    pub a: f64,
    pub mu: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub kappa: f64,
}

/// Analytic density and velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldsConfig {
    pub rho: ExprText,
    pub velocity: Vec<ExprText>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconstructionName {
    FirstOrder,
    #[default]
    Limited,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emit_every: Option<f64>,
    #[serde(default)]
    pub reconstruction: ReconstructionName,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Write a snapshot file for every emitted time.
    #[serde(default = "yes")]
    pub snapshots: bool,
}

/// `"self"` or analytic fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairConfig {
    Keyword(String),
    Fields(FieldsConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeConfig {
    pub pair: PairConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenormalizationName {
    Zero,
    Linear,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormalizationConfig {
    pub kind: RenormalizationName,
    #[serde(default = "infinity", skip_serializing_if = "is_infinite")]
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar: Option<ExprText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<ExprText>>,
    #[serde(default = "yes")]
    pub tangential: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalization: Option<RenormalizationConfig>,
    /// Final time of the residuals, `t_end` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    pub f: ExprText,
    pub t: f64,
    /// The difference step is `dt_factor * h`.
    #[serde(default = "half")]
    pub dt_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinConfig {
    /// Cells along the first axis of the reference run.
    pub reference_cells: usize,
    /// Data of the reference run, the run's own data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_initial: Option<FieldsConfig>,
    #[serde(default)]
    pub gronwall: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationConfig {
    #[serde(default = "default_mass_drift")]
    pub max_mass_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    #[serde(default)]
    pub energy: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_energy: Option<RelativeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_forms: Option<WeakConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport: Option<TransportConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twin: Option<TwinConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservation: Option<ConservationConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricContract {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_order: Option<f64>,
    /// Bound on `|a - b| / max(a, b)` over the two finest levels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_variation: Option<f64>,
    /// Bound on the finest-level value divided by the energy scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_relative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Cells along the first axis at each level.
    pub levels: Vec<usize>,
    #[serde(default)]
    pub metrics: BTreeMap<String, MetricContract>,
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub domain: DomainConfig,
    #[serde(default)]
    pub motion: MotionConfig,
    pub fluid: FluidConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<FieldsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mms: Option<FieldsConfig>,
    pub run: RunConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn yes() -> bool {
    true
}
fn infinity() -> f64 {
    f64::INFINITY
}
fn is_infinite(v: &f64) -> bool {
    v.is_infinite()
}
fn default_cfl() -> f64 {
    crate::solver::DEFAULT_CFL
}
fn default_max_steps() -> usize {
    crate::solver::DEFAULT_MAX_STEPS
}
fn default_mass_drift() -> f64 {
    1e-12
}

/// Metric names accepted in a study section.
pub const METRICS: &[&str] = &[
    "rho_l1",
    "u_l1",
    "transport_defect",
    "energy_defect",
    "rei_defect",
    "twin_energy",
    "twin_final_energy",
    "gronwall_constant",
    "weak_continuity",
    "weak_momentum",
    "renormalized",
];

impl ScenarioConfig {
    /// Canonical JSON of the resolved configuration, defaults included.
    pub fn resolved(&self) -> Value {
        serde_json::to_value(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical resolved JSON, hex encoded.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.resolved()).expect("configuration serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn dim(&self) -> usize {
        match self.domain.shape {
            Shape::Interval => 1,
            Shape::Rectangle | Shape::Disk => 2,
        }
    }

    /// Cells along the first axis at the configured resolution.
    pub fn base_cells(&self) -> usize {
        match self.domain.cells {
            Cells::One(n) => n,
            Cells::Two([n, _]) => n,
        }
    }
}

/// Parses and validates a JSON document, reporting every violation found.
pub fn parse_config(document: &str) -> Result<ScenarioConfig> {
    let value: Value = serde_json::from_str(document)
        .map_err(|e| Error::ConfigSyntax { line: e.line(), column: e.column(), message: e.to_string() })?;
    let mut errors = Vec::new();
    super::schema::check_keys(&value, &mut errors);
    let config = match serde_json::from_value::<ScenarioConfig>(value) {
        Ok(c) => Some(c),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    };
    if let Some(c) = &config {
        super::validate::validate(c, &mut errors);
    }
    match config {
        Some(c) if errors.is_empty() => Ok(c),
        _ => Err(Error::Config(errors)),
    }
}
