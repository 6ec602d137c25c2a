use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CognitiveError;
use crate::bam::BamKind;
use crate::traffic::{Regime, TrafficProfile};

/// Discrete learning state: the reference profile id when one matches, otherwise just the
/// load regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RlState {
    Profile(u8),
    Unmatched(Regime),
}

impl RlState {
    pub const COUNT: usize = 8;

    pub fn of(profile: &TrafficProfile) -> Self {
        match profile.profile_id {
            Some(id) => RlState::Profile(id),
            None => RlState::Unmatched(profile.regime),
        }
    }

    pub fn index(self) -> usize {
        match self {
            RlState::Profile(id) => usize::from(id.clamp(1, 6)) - 1,
            RlState::Unmatched(Regime::Under90) => 6,
            RlState::Unmatched(Regime::AtOrOver90) => 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Starting value of every entry. An optimistic value (at or above the best achievable
    /// reward) makes the greedy policy try every model before settling.
    #[serde(default = "default_initial")]
    pub initial: f64,
}

fn default_initial() -> f64 {
    1.0
}

impl Default for RlParams {
    fn default() -> Self {
        Self { alpha: 0.1, gamma: 0.0, epsilon: 0.1, initial: default_initial() }
    }
}

impl RlParams {
    pub fn validate(&self) -> Result<(), CognitiveError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(CognitiveError::InvalidParams(format!("alpha {} must lie in (0, 1]", self.alpha)));
        }
        if !(unit(self.gamma) && self.gamma < 1.0) {
            return Err(CognitiveError::InvalidParams(format!("gamma {} must lie in [0, 1)", self.gamma)));
        }
        if !unit(self.epsilon) {
            return Err(CognitiveError::InvalidParams(format!("epsilon {} must lie in [0, 1]", self.epsilon)));
        }
        if !self.initial.is_finite() {
            return Err(CognitiveError::InvalidParams("initial value must be finite".into()));
        }
        Ok(())
    }
}

/// Action values per (state, model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub params: RlParams,
    pub values: Vec<[f64; 3]>,
}

impl QTable {
    pub fn new(params: RlParams) -> Self {
        let initial = params.initial;
        Self { params, values: vec![[initial; 3]; RlState::COUNT] }
    }

    pub fn get(&self, state: RlState, action: BamKind) -> f64 {
        self.values[state.index()][action.index()]
    }

    pub fn set(&mut self, state: RlState, action: BamKind, value: f64) {
        self.values[state.index()][action.index()] = value;
    }

    /// Highest-valued model in `state`; ties go to MAM, then RDM, then ATCS.
    pub fn greedy(&self, state: RlState) -> BamKind {
        let row = &self.values[state.index()];
        let mut best = BamKind::Mam;
        for kind in BamKind::ALL {
            if row[kind.index()] > row[best.index()] {
                best = kind;
            }
        }
        best
    }

    pub fn max_value(&self, state: RlState) -> f64 {
        self.get(state, self.greedy(state))
    }
}

/// Epsilon-greedy choice: explore uniformly with probability epsilon, otherwise exploit.
pub fn rl_decide<R: Rng + ?Sized>(q: &QTable, state: RlState, rng: &mut R) -> BamKind {
    if q.params.epsilon > 0.0 && rng.random::<f64>() < q.params.epsilon {
        BamKind::ALL[rng.random_range(0..BamKind::ALL.len())]
    } else {
        q.greedy(state)
    }
}

/// One-step Q-learning update: `Q(s,a) += alpha * (r + gamma * max Q(s',.) - Q(s,a))`.
pub fn rl_update(q: &mut QTable, state: RlState, action: BamKind, reward: f64, next: RlState) {
    let target = reward + q.params.gamma * q.max_value(next);
    let old = q.get(state, action);
    q.set(state, action, old + q.params.alpha * (target - old));
}
