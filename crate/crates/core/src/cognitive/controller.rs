use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cbr_decide, cbr_retain, rl_decide, rl_update, rules_decide, Case, CaseBase, CbrParams, CognitiveError};
use super::{QTable, RlParams, RlState};
use crate::bam::BamKind;
use crate::traffic::TrafficProfile;

/// Version of the persisted controller memory format.
pub const MEMORY_SCHEMA_VERSION: u32 = 1;

/// Normalized loads above this value carry no extra information and are clipped so that
/// situation features stay finite.
const LOAD_FEATURE_CAP: f64 = 4.0;

/// How the active BAM is chosen. Textual form: `static:MAM`, `rules`, `cbr`, `rl`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ControllerMode {
    Static(BamKind),
    Rules,
    Cbr,
    Rl,
}

impl ControllerMode {
    pub fn is_learning(self) -> bool {
        matches!(self, ControllerMode::Cbr | ControllerMode::Rl)
    }
}

impl fmt::Display for ControllerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControllerMode::Static(b) => write!(f, "static:{b}"),
            ControllerMode::Rules => f.write_str("rules"),
            ControllerMode::Cbr => f.write_str("cbr"),
            ControllerMode::Rl => f.write_str("rl"),
        }
    }
}

impl FromStr for ControllerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(bam) = lower.strip_prefix("static:") {
            return bam.parse().map(ControllerMode::Static);
        }
        match lower.as_str() {
            "rules" => Ok(ControllerMode::Rules),
            "cbr" => Ok(ControllerMode::Cbr),
            "rl" => Ok(ControllerMode::Rl),
            _ => Err(format!("unknown controller `{s}` (expected static:<MAM|RDM|ATCS>, rules, cbr or rl)")),
        }
    }
}

impl TryFrom<String> for ControllerMode {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ControllerMode> for String {
    fn from(mode: ControllerMode) -> String {
        mode.to_string()
    }
}

/// What the controller sees at an epoch boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub epoch: usize,
    pub profile: TrafficProfile,
    /// Feature vector: normalized class loads, utilization, aggregate blocking.
    pub situation: Vec<f64>,
}

impl Observation {
    pub fn new(epoch: usize, profile: TrafficProfile, normalized_loads: &[f64], utilization: f64, blocking: f64) -> Self {
        let mut situation: Vec<f64> = normalized_loads
            .iter()
            .map(|&x| if x.is_nan() { 0.0 } else { x.clamp(0.0, LOAD_FEATURE_CAP) })
            .collect();
        situation.push(utilization.clamp(0.0, 1.0));
        situation.push(blocking.clamp(0.0, 1.0));
        Self { epoch, profile, situation }
    }
}

/// Persisted learning state, for warm restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerMemory {
    pub schema_version: u32,
    #[serde(default)]
    pub cases: Vec<Case>,
    #[serde(default)]
    pub q_table: Option<QTable>,
}

impl ControllerMemory {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("memory is serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, CognitiveError> {
        let memory: ControllerMemory = serde_json::from_str(text).map_err(|e| CognitiveError::Memory(e.to_string()))?;
        if memory.schema_version != MEMORY_SCHEMA_VERSION {
            return Err(CognitiveError::Memory(format!(
                "unsupported schema_version {} (expected {MEMORY_SCHEMA_VERSION})",
                memory.schema_version
            )));
        }
        Ok(memory)
    }
}

#[derive(Debug, Clone)]
struct Pending {
    situation: Vec<f64>,
    state: RlState,
    action: BamKind,
    epoch: usize,
}

/// A BAM-selection controller together with the memory it owns.
///
/// Each epoch the caller first asks for a decision, applies it, and then calls [`learn`] with
/// the reward of the epoch that just ended; that reward is credited to the decision taken one
/// epoch earlier.
///
/// [`learn`]: Controller::learn
#[derive(Debug, Clone)]
pub struct Controller {
    mode: ControllerMode,
    cbr: CbrParams,
    cases: CaseBase,
    q: QTable,
    rng: ChaCha8Rng,
    previous: Option<Pending>,
    fresh: Option<Pending>,
}

impl Controller {
    pub fn new(mode: ControllerMode, cbr: CbrParams, rl: RlParams, seed: u64) -> Result<Self, CognitiveError> {
        cbr.validate()?;
        rl.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // keep the controller's randomness apart from the workload streams
        rng.set_stream(u64::MAX);
        Ok(Self { mode, cbr, cases: CaseBase::default(), q: QTable::new(rl), rng, previous: None, fresh: None })
    }

    pub fn mode(&self) -> ControllerMode {
        self.mode
    }

    pub fn cases(&self) -> &CaseBase {
        &self.cases
    }

    pub fn q_table(&self) -> &QTable {
        &self.q
    }

    /// Chooses the BAM for the next epoch.
    pub fn decide(&mut self, obs: &Observation, current: BamKind) -> BamKind {
        let state = RlState::of(&obs.profile);
        let action = match self.mode {
            ControllerMode::Static(b) => b,
            ControllerMode::Rules => rules_decide(&obs.profile, current),
            ControllerMode::Cbr => cbr_decide(&self.cases, &obs.situation, self.cbr.theta_sim, &obs.profile, current).0,
            ControllerMode::Rl => rl_decide(&self.q, state, &mut self.rng),
        };
        self.fresh = Some(Pending { situation: obs.situation.clone(), state, action, epoch: obs.epoch });
        action
    }

    /// Credits `reward` (observed over the epoch ending at `obs`) to the previous decision.
    pub fn learn(&mut self, reward: f64, obs: &Observation) {
        if let Some(prev) = self.previous.take() {
            match self.mode {
                ControllerMode::Cbr => {
                    let case =
                        Case { situation: prev.situation, action: prev.action, outcome: reward, retained_at: prev.epoch };
                    cbr_retain(&mut self.cases, case, self.cbr.theta_retain, self.cbr.capacity);
                }
                ControllerMode::Rl => {
                    rl_update(&mut self.q, prev.state, prev.action, reward, RlState::of(&obs.profile));
                }
                ControllerMode::Static(_) | ControllerMode::Rules => {}
            }
        }
        self.previous = self.fresh.take();
    }

    pub fn export_memory(&self) -> ControllerMemory {
        ControllerMemory {
            schema_version: MEMORY_SCHEMA_VERSION,
            cases: self.cases.cases.clone(),
            q_table: (self.mode == ControllerMode::Rl).then(|| self.q.clone()),
        }
    }

    /// Replaces the controller's memory with a previously exported one.
    pub fn import_memory(&mut self, memory: ControllerMemory) -> Result<(), CognitiveError> {
        if memory.schema_version != MEMORY_SCHEMA_VERSION {
            return Err(CognitiveError::Memory(format!("unsupported schema_version {}", memory.schema_version)));
        }
        if let Some(q) = memory.q_table {
            q.params.validate()?;
            if q.values.len() != RlState::COUNT {
                return Err(CognitiveError::Memory(format!("q_table must have {} rows", RlState::COUNT)));
            }
            self.q = q;
        }
        self.cases = CaseBase { cases: memory.cases };
        Ok(())
    }
}
