//! Scenario files: everything a simulation run needs, as one JSON document.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "bam": { "capacity": 1000, "mam": [500, 300, 200], "rdm": [700, 900, 1000],
//!            "atcs": [500, 300, 200], "initial": "MAM" },
//!   "controller": { "mode": "cbr" },
//!   "policy": { "w_util": 1.0, "w_block": 1.0 },
//!   "workload": {
//!     "reference_bc": [750, 500, 400],
//!     "classes": [{ "mean_holding": 10 }, { "mean_holding": 10 }, { "mean_holding": 10 }],
//!     "phases": [{ "profile": 1, "dwell": 2000 }, { "levels": ["High", "High", "High"], "dwell": 2000 }]
//!   },
//!   "epoch_length": 100,
//!   "duration": 12000
//! }
//! ```
//!
//! Omitted sections fall back to defaults: a single link `L0` with route `r0`, the rule-table
//! controller, unit utilization and blocking weights, unit mean holding time and demands drawn
//! uniformly from {1, 5, 10}.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bam::{BamKind, BamParameters, Bandwidth, BamConfig, SwitchMode};
use crate::cognitive::{CbrParams, ControllerMode, ManagerPolicy, RlParams};
use crate::plane::Topology;
use crate::traffic::{level_to_rate, ClassTraffic, DemandPoint, LoadLevel, Phase, TrafficProfile, WorkloadSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// One validation problem, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl FieldError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario file not found: {0}")]
    NotFound(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid scenario:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BamSection {
    pub capacity: Bandwidth,
    pub mam: Vec<Bandwidth>,
    pub rdm: Vec<Bandwidth>,
    pub atcs: Vec<Bandwidth>,
    #[serde(default = "default_initial")]
    pub initial: BamKind,
    #[serde(default)]
    pub switch_mode: SwitchMode,
}

fn default_initial() -> BamKind {
    BamKind::Mam
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub mode: ControllerMode,
    #[serde(default)]
    pub cbr: CbrParams,
    #[serde(default)]
    pub rl: RlParams,
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self { mode: ControllerMode::Rules, cbr: CbrParams::default(), rl: RlParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSection {
    #[serde(default = "default_holding")]
    pub mean_holding: f64,
    #[serde(default = "default_demand")]
    pub demand: Vec<DemandPoint>,
    /// Route carrying the class; the first route of the topology when omitted.
    #[serde(default)]
    pub route: Option<String>,
}

impl Default for ClassSection {
    fn default() -> Self {
        Self { mean_holding: default_holding(), demand: default_demand(), route: None }
    }
}

fn default_holding() -> f64 {
    1.0
}

fn default_demand() -> Vec<DemandPoint> {
    DemandPoint::uniform(&[1, 5, 10])
}

/// A workload phase given by reference profile id, explicit load levels, or raw arrival rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    pub dwell: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<LoadLevel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
}

impl PhaseSection {
    pub fn profile(profile: u8, dwell: f64) -> Self {
        Self { dwell, profile: Some(profile), levels: None, rates: None }
    }

    pub fn levels(levels: Vec<LoadLevel>, dwell: f64) -> Self {
        Self { dwell, profile: None, levels: Some(levels), rates: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    /// Bandwidth each class's load level is measured against; the MAM constraints by default.
    #[serde(default)]
    pub reference_bc: Option<Vec<Bandwidth>>,
    pub classes: Vec<ClassSection>,
    pub phases: Vec<PhaseSection>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub topology: Topology,
    pub bam: BamSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub policy: ManagerPolicy,
    pub workload: WorkloadSection,
    #[serde(default = "default_epoch_length")]
    pub epoch_length: f64,
    pub duration: f64,
    /// Leading epochs left out of run totals.
    #[serde(default = "default_warmup")]
    pub warmup_epochs: usize,
    #[serde(default)]
    pub output: OutputFormat,
}

fn default_epoch_length() -> f64 {
    100.0
}

fn default_warmup() -> usize {
    5
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    /// Reads and parses a scenario file (without validating it).
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                ScenarioError::NotFound(path.display().to_string())
            } else {
                ScenarioError::Io { path: path.display().to_string(), source }
            }
        })?;
        Self::from_json(&text)
    }

    pub fn classes(&self) -> usize {
        self.workload.classes.len()
    }

    pub fn params(&self) -> BamParameters {
        BamParameters::new(self.bam.capacity, self.bam.mam.clone(), self.bam.rdm.clone(), self.bam.atcs.clone())
    }

    /// Reference bandwidth per class for load levels.
    pub fn reference(&self) -> Vec<Bandwidth> {
        self.workload.reference_bc.clone().unwrap_or_else(|| self.bam.mam.clone())
    }

    /// Route of every class.
    pub fn class_routes(&self) -> Vec<String> {
        let default = self.topology.routes.first().map(|r| r.id.clone()).unwrap_or_default();
        self.workload.classes.iter().map(|c| c.route.clone().unwrap_or_else(|| default.clone())).collect()
    }

    /// Returns every problem at once; an empty list means the scenario can be run.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errors.push(FieldError::new(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        for (path, msg) in self.topology.problems() {
            errors.push(FieldError::new(format!("topology.{path}"), msg));
        }
        self.validate_bam(&mut errors);
        if let Err(e) = self.controller.cbr.validate() {
            errors.push(FieldError::new("controller.cbr", e.to_string()));
        }
        if let Err(e) = self.controller.rl.validate() {
            errors.push(FieldError::new("controller.rl", e.to_string()));
        }
        if let Err(e) = self.policy.validate() {
            errors.push(FieldError::new("policy", e.to_string()));
        }
        self.validate_workload(&mut errors);
        if !(self.epoch_length > 0.0 && self.epoch_length.is_finite()) {
            errors.push(FieldError::new("epoch_length", "must be positive and finite"));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            errors.push(FieldError::new("duration", "must be non-negative and finite"));
        }
        errors
    }

    fn validate_bam(&self, errors: &mut Vec<FieldError>) {
        let n = self.classes();
        if self.bam.capacity == 0 {
            errors.push(FieldError::new("bam.capacity", "must be positive"));
        }
        for kind in BamKind::ALL {
            let field = format!("bam.{}", kind.as_str().to_ascii_lowercase());
            let bc = self.params().bc(kind).to_vec();
            if bc.len() != n {
                errors.push(FieldError::new(field, format!("expected {n} constraints (one per class), found {}", bc.len())));
                continue;
            }
            if n == 0 {
                continue;
            }
            for e in BamConfig::new(self.bam.capacity, bc).validate(kind) {
                if !matches!(e, crate::bam::ConfigError::ZeroCapacity) {
                    errors.push(FieldError::new(field.clone(), e.to_string()));
                }
            }
        }
    }

    fn validate_workload(&self, errors: &mut Vec<FieldError>) {
        let n = self.classes();
        let w = &self.workload;
        if n == 0 {
            errors.push(FieldError::new("workload.classes", "at least one class is required"));
        }
        if let Some(reference) = &w.reference_bc {
            if reference.len() != n {
                errors.push(FieldError::new(
                    "workload.reference_bc",
                    format!("expected {n} values (one per class), found {}", reference.len()),
                ));
            }
        }
        let routes: Vec<&str> = self.topology.routes.iter().map(|r| r.id.as_str()).collect();
        for (c, class) in w.classes.iter().enumerate() {
            let at = |field: &str| format!("workload.classes[{c}].{field}");
            if !(class.mean_holding > 0.0 && class.mean_holding.is_finite()) {
                errors.push(FieldError::new(at("mean_holding"), "must be positive and finite"));
            }
            if class.demand.is_empty() {
                errors.push(FieldError::new(at("demand"), "distribution is empty"));
            } else {
                if class.demand.iter().any(|d| d.bandwidth == 0) {
                    errors.push(FieldError::new(at("demand"), "bandwidth demands must be positive"));
                }
                if class.demand.iter().any(|d| !(d.weight >= 0.0 && d.weight.is_finite())) {
                    errors.push(FieldError::new(at("demand"), "weights must be finite and non-negative"));
                } else {
                    let total: f64 = class.demand.iter().map(|d| d.weight).sum();
                    if (total - 1.0).abs() > 1e-9 {
                        errors.push(FieldError::new(at("demand"), format!("weights sum to {total}, expected 1")));
                    }
                }
            }
            if let Some(route) = &class.route {
                if !routes.contains(&route.as_str()) {
                    errors.push(FieldError::new(at("route"), format!("unknown route `{route}`")));
                }
            }
        }
        if w.phases.is_empty() {
            errors.push(FieldError::new("workload.phases", "at least one phase is required"));
        }
        let reference_ok = w.reference_bc.as_ref().map_or(self.bam.mam.len(), Vec::len) == n;
        for (p, phase) in w.phases.iter().enumerate() {
            let at = |field: &str| format!("workload.phases[{p}].{field}");
            if !(phase.dwell > 0.0 && phase.dwell.is_finite()) {
                errors.push(FieldError::new(at("dwell"), "must be positive and finite"));
            }
            let given = [phase.profile.is_some(), phase.levels.is_some(), phase.rates.is_some()];
            if given.iter().filter(|g| **g).count() != 1 {
                errors.push(FieldError::new(
                    format!("workload.phases[{p}]"),
                    "exactly one of `profile`, `levels` or `rates` must be given",
                ));
                continue;
            }
            if let Some(id) = phase.profile {
                if !(1..=6).contains(&id) {
                    errors.push(FieldError::new(at("profile"), format!("unknown profile {id} (expected 1..6)")));
                } else if n != 3 {
                    errors.push(FieldError::new(at("profile"), "reference profiles describe exactly 3 classes"));
                }
            }
            if let Some(levels) = &phase.levels {
                if levels.len() != n {
                    errors.push(FieldError::new(at("levels"), format!("expected {n} levels, found {}", levels.len())));
                }
            }
            if let Some(rates) = &phase.rates {
                if rates.len() != n {
                    errors.push(FieldError::new(at("rates"), format!("expected {n} rates, found {}", rates.len())));
                } else if let Some(c) = rates.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
                    errors.push(FieldError::new(at("rates"), format!("rate of class {c} must be positive")));
                }
            }
            if phase.rates.is_none() && reference_ok {
                if let Some(c) = self.reference().iter().position(|&r| r == 0) {
                    errors.push(FieldError::new(
                        format!("workload.phases[{p}]"),
                        format!("class {c} has zero reference bandwidth, so its load level gives no traffic"),
                    ));
                }
            }
        }
    }

    /// Per-phase load levels (None for raw-rate phases).
    fn phase_levels(&self, phase: &PhaseSection) -> Option<Vec<LoadLevel>> {
        match (phase.profile, &phase.levels) {
            (Some(id), _) => TrafficProfile::reference(id).map(|p| p.class_load),
            (None, Some(levels)) => Some(levels.clone()),
            _ => None,
        }
    }

    /// Poisson workload description of the scenario. Only meaningful for a valid scenario.
    pub fn workload_spec(&self) -> WorkloadSpec {
        let classes: Vec<ClassTraffic> = self
            .workload
            .classes
            .iter()
            .map(|c| ClassTraffic { mean_holding: c.mean_holding, demand: c.demand.clone() })
            .collect();
        let reference = BamConfig::new(self.bam.capacity, self.reference());
        let phases = self
            .workload
            .phases
            .iter()
            .map(|phase| {
                let rates = match self.phase_levels(phase) {
                    Some(levels) => levels
                        .iter()
                        .zip(&classes)
                        .enumerate()
                        .map(|(c, (&level, t))| level_to_rate(level, c, &reference, t.mean_bandwidth(), t.mean_holding).0)
                        .collect(),
                    None => phase.rates.clone().unwrap_or_default(),
                };
                Phase { dwell: phase.dwell, rates }
            })
            .collect();
        WorkloadSpec { classes, duration: self.duration, phases }
    }

    /// A three-class single-link scenario driven by reference profiles.
    ///
    /// Capacity 1000 with MAM (500, 300, 200), RDM (700, 900, 1000) and ATCS (500, 300, 200).
    /// Load levels are measured against (750, 500, 400), so an all-High load offers 1.32x the
    /// capacity while profiles 1 to 3 stay below it. Flows last 10 time units on average.
    pub fn three_class(phases: Vec<PhaseSection>, duration: f64, controller: ControllerMode) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: String::new(),
            topology: Topology::default(),
            bam: BamSection {
                capacity: 1000,
                mam: vec![500, 300, 200],
                rdm: vec![700, 900, 1000],
                atcs: vec![500, 300, 200],
                initial: BamKind::Mam,
                switch_mode: SwitchMode::KeepAll,
            },
            controller: ControllerSection { mode: controller, ..Default::default() },
            policy: ManagerPolicy::default(),
            workload: WorkloadSection {
                reference_bc: Some(vec![750, 500, 400]),
                classes: vec![ClassSection { mean_holding: 10.0, ..Default::default() }; 3],
                phases,
            },
            epoch_length: default_epoch_length(),
            duration,
            warmup_epochs: default_warmup(),
            output: OutputFormat::Json,
        }
    }
}
