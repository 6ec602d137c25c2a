//! Bandwidth Allocation Models over a single capacity-constrained link.
//!
//! Three admission engines are provided, all operating on the same [`LinkState`]:
//!
//! * **MAM** (Maximum Allocation Model): every class owns a private cap `BCc`; no sharing,
//!   no preemption.
//! * **RDM** (Russian Dolls Model): nested cumulative caps, `sum(used[0..=c]) <= BCc`, with
//!   `BC(N-1) = C`. Lower-priority classes may use residual capacity and are preempted by
//!   higher-priority arrivals.
//! * **ATCS** (AllocTC-Sharing): native per-class shares summing to `C`; a class exceeding its
//!   share borrows idle bandwidth from the other classes. Borrowed allocations are preempted
//!   when native traffic needs the capacity back.
//!
//! Class 0 is the highest priority. Bandwidth is counted in exact integer units.

mod atcs;
mod config;
mod link;
mod mam;
mod rdm;
mod victims;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{BamConfig, BamParameters, ConfigError};
pub use link::{LinkState, LoanLedger, SwitchMode, Violation};

/// Index of a traffic class. Lower index means higher priority.
pub type ClassId = usize;

/// Bandwidth in abstract integer units.
pub type Bandwidth = u64;

/// Identifier of a flow (an LSP-like demand).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlowId(pub u64);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "flow#{}", self.0)
    }
}

/// Which bandwidth allocation model governs admission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BamKind {
    #[serde(rename = "MAM")]
    Mam,
    #[serde(rename = "RDM")]
    Rdm,
    #[serde(rename = "ATCS")]
    Atcs,
}

impl BamKind {
    /// All models in the fixed preference order used for tie-breaking.
    pub const ALL: [BamKind; 3] = [BamKind::Mam, BamKind::Rdm, BamKind::Atcs];

    pub fn index(self) -> usize {
        match self {
            BamKind::Mam => 0,
            BamKind::Rdm => 1,
            BamKind::Atcs => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BamKind::Mam => "MAM",
            BamKind::Rdm => "RDM",
            BamKind::Atcs => "ATCS",
        }
    }
}

impl fmt::Display for BamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BamKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "MAM" => Ok(BamKind::Mam),
            "RDM" => Ok(BamKind::Rdm),
            "ATCS" => Ok(BamKind::Atcs),
            other => Err(format!("unknown BAM `{other}` (expected MAM, RDM or ATCS)")),
        }
    }
}

/// A bandwidth request for one flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRequest {
    pub id: FlowId,
    pub class: ClassId,
    pub bandwidth: Bandwidth,
    pub arrival_time: f64,
    pub holding_time: f64,
}

/// An admitted flow as recorded on a link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub flow: FlowId,
    pub class: ClassId,
    pub bandwidth: Bandwidth,
    /// Class whose idle share this allocation borrows (ATCS only). `None` for native traffic.
    pub lender: Option<ClassId>,
    pub admitted_at: f64,
}

impl Allocation {
    pub fn is_borrowed(&self) -> bool {
        self.lender.is_some()
    }
}

/// A bandwidth constraint of one of the models; used as the rejection reason and in
/// invariant reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "constraint", content = "class", rename_all = "snake_case")]
pub enum Constraint {
    /// `used_total <= C`.
    Capacity,
    /// MAM private cap `used[c] <= BCc`.
    ClassCap(ClassId),
    /// RDM doll `sum(used[0..=c]) <= BCc`.
    Doll(ClassId),
    /// ATCS native share `native[c] <= BCc`.
    NativeShare(ClassId),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Capacity => f.write_str("link capacity"),
            Constraint::ClassCap(c) => write!(f, "MAM cap BC{c}"),
            Constraint::Doll(c) => write!(f, "RDM doll BC{c}"),
            Constraint::NativeShare(c) => write!(f, "ATCS native share BC{c}"),
        }
    }
}

/// Outcome of an admission request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Admit,
    /// Admit after tearing down the listed flows. Never empty.
    AdmitWithPreemption { victims: Vec<FlowId> },
    Reject { reason: Constraint },
}

/// Decision returned by an admission engine.
///
/// A decision is computed against a specific link state; [`LinkState::apply`] executes it
/// atomically (victims first, then the new allocation).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub verdict: Verdict,
    /// Lender class for a borrowed (ATCS) admission.
    pub lender: Option<ClassId>,
}

impl Decision {
    pub(crate) fn admit(lender: Option<ClassId>) -> Self {
        Self { verdict: Verdict::Admit, lender }
    }

    pub(crate) fn preempt(victims: Vec<FlowId>) -> Self {
        debug_assert!(!victims.is_empty());
        Self { verdict: Verdict::AdmitWithPreemption { victims }, lender: None }
    }

    pub(crate) fn reject(reason: Constraint) -> Self {
        Self { verdict: Verdict::Reject { reason }, lender: None }
    }

    pub fn is_admitted(&self) -> bool {
        !matches!(self.verdict, Verdict::Reject { .. })
    }

    pub fn victims(&self) -> &[FlowId] {
        match &self.verdict {
            Verdict::AdmitWithPreemption { victims } => victims,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BamError {
    #[error("{0} is already allocated on this link")]
    DuplicateFlowId(FlowId),
    #[error("{0} is not allocated on this link")]
    UnknownFlowId(FlowId),
    #[error("requested bandwidth must be positive")]
    NonPositiveBandwidth,
    #[error("traffic class {class} does not exist (link has {classes} classes)")]
    UnknownClass { class: ClassId, classes: usize },
    #[error("invalid BAM configuration: {0}")]
    InvalidConfig(#[from] ConfigError),
    #[error("decision does not match the current link state")]
    StaleDecision,
}
