//! Traffic profiles and workload synthesis.
//!
//! A profile describes per-class load levels (Low/Medium/High) plus the link-load regime
//! (below or at/above 90% utilization). Six reference profiles are known by id:
//!
//! | id    | TC0    | TC1    | TC2  | link load |
//! |-------|--------|--------|------|-----------|
//! | 1     | High   | Low    | Low  | < 90%     |
//! | 2     | Medium | Low    | High | < 90%     |
//! | 3     | Low    | Medium | High | < 90%     |
//! | 4,5,6 | High   | High   | High | >= 90%    |
//!
//! Ids 4 to 6 describe the same observable state; classification reports 4.

mod workload;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bam::{BamConfig, ClassId};

pub use workload::{build_workload, stream_digest, ClassTraffic, DemandPoint, Phase, WorkloadSpec};

/// Offered load of a class relative to its reference bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LoadLevel {
    Low,
    Medium,
    High,
}

impl LoadLevel {
    /// Upper bound (inclusive) of the Low band, as a fraction of the reference bandwidth.
    pub const LOW_MAX: f64 = 0.35;
    /// Upper bound (inclusive) of the Medium band.
    pub const MEDIUM_MAX: f64 = 0.65;

    /// Target offered load of the level, as a fraction of the reference bandwidth.
    pub fn load_fraction(self) -> f64 {
        match self {
            LoadLevel::Low => 0.2,
            LoadLevel::Medium => 0.5,
            LoadLevel::High => 0.8,
        }
    }

    pub fn from_ratio(ratio: f64) -> Self {
        if ratio <= Self::LOW_MAX {
            LoadLevel::Low
        } else if ratio <= Self::MEDIUM_MAX {
            LoadLevel::Medium
        } else {
            LoadLevel::High
        }
    }
}

impl fmt::Display for LoadLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Link-load regime of a monitoring window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Regime {
    Under90,
    AtOrOver90,
}

impl Regime {
    pub const THRESHOLD: f64 = 0.9;

    pub fn from_utilization(utilization: f64) -> Self {
        if utilization >= Self::THRESHOLD {
            Regime::AtOrOver90
        } else {
            Regime::Under90
        }
    }
}

use LoadLevel::{High, Low, Medium};

const TABLE: [([LoadLevel; 3], Regime); 6] = [
    ([High, Low, Low], Regime::Under90),
    ([Medium, Low, High], Regime::Under90),
    ([Low, Medium, High], Regime::Under90),
    ([High, High, High], Regime::AtOrOver90),
    ([High, High, High], Regime::AtOrOver90),
    ([High, High, High], Regime::AtOrOver90),
];

/// Observed (or intended) traffic situation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrafficProfile {
    pub class_load: Vec<LoadLevel>,
    pub regime: Regime,
    /// Reference profile id (1..=6) when the levels and regime match one.
    pub profile_id: Option<u8>,
}

impl TrafficProfile {
    /// Builds a profile and resolves its reference id, if any.
    pub fn new(class_load: Vec<LoadLevel>, regime: Regime) -> Self {
        let profile_id = TABLE
            .iter()
            .position(|(levels, r)| *r == regime && class_load.as_slice() == levels.as_slice())
            .map(|i| i as u8 + 1);
        Self { class_load, regime, profile_id }
    }

    /// The reference profile with the given id (1..=6).
    pub fn reference(id: u8) -> Option<Self> {
        let (levels, regime) = TABLE.get(usize::from(id).checked_sub(1)?)?;
        Some(Self { class_load: levels.to_vec(), regime: *regime, profile_id: Some(id) })
    }

    pub fn is_all_high(&self) -> bool {
        !self.class_load.is_empty() && self.class_load.iter().all(|&l| l == High)
    }
}

impl fmt::Display for TrafficProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let levels: Vec<String> = self.class_load.iter().map(ToString::to_string).collect();
        let regime = match self.regime {
            Regime::Under90 => "<90%",
            Regime::AtOrOver90 => ">=90%",
        };
        write!(f, "({}) {regime}", levels.join(","))?;
        if let Some(id) = self.profile_id {
            write!(f, " [profile {id}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrafficError {
    #[error("observation window is empty")]
    EmptyWindow,
    #[error("invalid workload spec: {0}")]
    InvalidSpec(String),
}

/// What a monitoring window observed.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    /// Offered load per class, in bandwidth units (sum of bandwidth x holding time / window length).
    pub offered_load: Vec<f64>,
    /// Reference bandwidth per class the loads are normalized by.
    pub reference: Vec<f64>,
    /// Time-weighted utilization over the window.
    pub utilization: f64,
    pub length: f64,
}

impl ObservationWindow {
    /// Offered load normalized by the reference bandwidth. A zero reference maps any load to
    /// infinity and no load to zero.
    pub fn normalized_loads(&self) -> Vec<f64> {
        self.offered_load
            .iter()
            .zip(&self.reference)
            .map(|(&rho, &reference)| {
                if reference > 0.0 {
                    rho / reference
                } else if rho > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Maps an observation window onto a traffic profile.
pub fn classify_profile(window: &ObservationWindow) -> Result<TrafficProfile, TrafficError> {
    if !(window.length > 0.0) || window.offered_load.is_empty() {
        return Err(TrafficError::EmptyWindow);
    }
    let levels = window.normalized_loads().into_iter().map(LoadLevel::from_ratio).collect();
    Ok(TrafficProfile::new(levels, Regime::from_utilization(window.utilization)))
}

/// Arrival rate and service rate giving class `class` the offered load of `level`:
/// `rho = lambda * mean_bandwidth / mu = fraction(level) * BC[class]`.
pub fn level_to_rate(
    level: LoadLevel,
    class: ClassId,
    reference: &BamConfig,
    mean_bandwidth: f64,
    mean_holding: f64,
) -> (f64, f64) {
    let mu = 1.0 / mean_holding;
    let rho = level.load_fraction() * reference.bc[class] as f64;
    (rho * mu / mean_bandwidth, mu)
}
