//! Cognitive BAM selection.
//!
//! Every monitoring epoch a controller looks at the observed traffic profile and metrics and
//! decides which model should be active. Four strategies are available: a fixed model, the
//! reference-profile rule table, case-based reasoning over past decisions, and tabular
//! Q-learning.

mod cbr;
mod controller;
mod rl;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bam::BamKind;
use crate::traffic::{Regime, TrafficProfile};

pub use cbr::{cbr_decide, cbr_retain, distance, Case, CaseBase, CbrParams};
pub use controller::{Controller, ControllerMemory, ControllerMode, Observation, MEMORY_SCHEMA_VERSION};
pub use rl::{rl_decide, rl_update, QTable, RlParams, RlState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CognitiveError {
    #[error("invalid manager policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid controller parameters: {0}")]
    InvalidParams(String),
    #[error("memory file: {0}")]
    Memory(String),
}

/// Weights expressing the network manager's objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManagerPolicy {
    pub w_util: f64,
    pub w_block: f64,
    #[serde(default)]
    pub w_loss: f64,
    /// Reward penalty charged for every BAM switch.
    #[serde(default)]
    pub switch_cost: f64,
    #[serde(default)]
    pub objective: String,
}

impl Default for ManagerPolicy {
    fn default() -> Self {
        Self { w_util: 1.0, w_block: 1.0, w_loss: 0.0, switch_cost: 0.0, objective: String::new() }
    }
}

impl ManagerPolicy {
    pub fn validate(&self) -> Result<(), CognitiveError> {
        let values = [self.w_util, self.w_block, self.w_loss, self.switch_cost];
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(CognitiveError::InvalidPolicy("weights and switch cost must be finite and >= 0".into()));
        }
        if self.w_util == 0.0 && self.w_block == 0.0 && self.w_loss == 0.0 {
            return Err(CognitiveError::InvalidPolicy("at least one weight must be positive".into()));
        }
        Ok(())
    }

    /// Multiplies every weight and the switch cost by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            w_util: self.w_util * k,
            w_block: self.w_block * k,
            w_loss: self.w_loss * k,
            switch_cost: self.switch_cost * k,
            objective: self.objective.clone(),
        }
    }
}

/// Performance of one monitoring epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub epoch: usize,
    /// Time-weighted utilization in `[0, 1]`.
    pub utilization: f64,
    /// Rejected / offered per class; 0 for a class without arrivals.
    pub blocking: Vec<f64>,
    pub preemptions: u64,
    /// Fraction of the epoch spent at or above 98% utilization.
    pub loss_proxy: f64,
    pub active_bam: BamKind,
}

impl MetricsSnapshot {
    pub fn mean_blocking(&self) -> f64 {
        if self.blocking.is_empty() {
            0.0
        } else {
            self.blocking.iter().sum::<f64>() / self.blocking.len() as f64
        }
    }
}

/// Linear reward: utilization minus blocking and loss penalties, minus the switch cost.
pub fn reward(m: &MetricsSnapshot, policy: &ManagerPolicy, switched: bool) -> f64 {
    let switch = if switched { policy.switch_cost } else { 0.0 };
    policy.w_util * m.utilization - policy.w_block * m.mean_blocking() - policy.w_loss * m.loss_proxy - switch
}

/// Models recommended for a traffic profile, in the fixed order MAM, RDM, ATCS.
///
/// Profile 1 favours sharing (RDM or ATCS), profiles 2 and 3 accept any model, and an all-High
/// load at or above 90% calls for MAM. Anything else is unconstrained.
pub fn indicated_bam(profile: &TrafficProfile) -> &'static [BamKind] {
    const SHARING: &[BamKind] = &[BamKind::Rdm, BamKind::Atcs];
    const ONLY_MAM: &[BamKind] = &[BamKind::Mam];
    match profile.profile_id {
        Some(1) => SHARING,
        _ if profile.regime == Regime::AtOrOver90 && profile.is_all_high() => ONLY_MAM,
        _ => &BamKind::ALL,
    }
}

/// Keeps `current` when it is recommended for `profile`, otherwise moves to the first
/// recommended model.
pub fn rules_decide(profile: &TrafficProfile, current: BamKind) -> BamKind {
    let indicated = indicated_bam(profile);
    if indicated.contains(&current) {
        current
    } else {
        indicated[0]
    }
}
