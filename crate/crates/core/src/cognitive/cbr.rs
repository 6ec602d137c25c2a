use serde::{Deserialize, Serialize};

use super::{rules_decide, CognitiveError};
use crate::bam::BamKind;
use crate::traffic::TrafficProfile;

/// A remembered decision: the situation it was taken in, the model chosen and the reward
/// observed afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub situation: Vec<f64>,
    pub action: BamKind,
    pub outcome: f64,
    /// Epoch the case was retained in; newer cases win ties.
    pub retained_at: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbrParams {
    /// Cases farther than this from the query are not reused.
    pub theta_sim: f64,
    /// A new case closer than this to an existing one is kept only if its outcome is better.
    pub theta_retain: f64,
    pub capacity: usize,
}

impl Default for CbrParams {
    fn default() -> Self {
        Self { theta_sim: 0.15, theta_retain: 0.05, capacity: 512 }
    }
}

impl CbrParams {
    pub fn validate(&self) -> Result<(), CognitiveError> {
        if !(self.theta_sim >= 0.0 && self.theta_sim.is_finite()) {
            return Err(CognitiveError::InvalidParams("theta_sim must be finite and >= 0".into()));
        }
        if !(self.theta_retain >= 0.0 && self.theta_retain.is_finite()) {
            return Err(CognitiveError::InvalidParams("theta_retain must be finite and >= 0".into()));
        }
        if self.capacity == 0 {
            return Err(CognitiveError::InvalidParams("case base capacity must be positive".into()));
        }
        Ok(())
    }
}

/// Bounded memory of past cases, in retention order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseBase {
    pub cases: Vec<Case>,
}

impl CaseBase {
    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// Index of the case closest to `situation`; ties go to the most recently retained.
    fn nearest(&self, situation: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, case) in self.cases.iter().enumerate() {
            let d = distance(&case.situation, situation);
            let better = match best {
                None => true,
                Some((j, bd)) => d < bd || (d == bd && case.retained_at >= self.cases[j].retained_at),
            };
            if better {
                best = Some((i, d));
            }
        }
        best
    }
}

/// Euclidean distance between two situation vectors.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Chooses a model by reusing the nearest remembered case.
///
/// The nearest case within `theta_sim` is reused unless another case within `theta_sim` of the
/// query recommends a different model with a strictly better outcome; in every other situation
/// (empty memory, nothing similar enough, `theta_sim == 0`) the rule table decides. Returns the
/// chosen model and the reused case, if any.
pub fn cbr_decide(
    base: &CaseBase,
    situation: &[f64],
    theta_sim: f64,
    profile: &TrafficProfile,
    current: BamKind,
) -> (BamKind, Option<Case>) {
    let fallback = (rules_decide(profile, current), None);
    if theta_sim <= 0.0 {
        return fallback;
    }
    let Some((i, d)) = base.nearest(situation) else {
        return fallback;
    };
    if d > theta_sim {
        return fallback;
    }
    let nearest = &base.cases[i];
    let contested = base.cases.iter().any(|c| {
        c.action != nearest.action && c.outcome > nearest.outcome && distance(&c.situation, situation) <= theta_sim
    });
    if contested {
        return fallback;
    }
    (nearest.action, Some(nearest.clone()))
}

/// Stores a new case when it adds information: it lies farther than `theta_retain` from every
/// remembered case, or it beats the outcome of its nearest neighbour. When the memory exceeds
/// `capacity`, the lowest-outcome case is evicted (oldest first on ties). Returns whether the
/// case was stored.
pub fn cbr_retain(base: &mut CaseBase, case: Case, theta_retain: f64, capacity: usize) -> bool {
    let keep = match base.nearest(&case.situation) {
        None => true,
        Some((i, d)) => d > theta_retain || case.outcome > base.cases[i].outcome,
    };
    if !keep {
        return false;
    }
    base.cases.push(case);
    while base.cases.len() > capacity.max(1) {
        let worst = base
            .cases
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.outcome.total_cmp(&b.outcome).then(a.retained_at.cmp(&b.retained_at)))
            .map(|(i, _)| i)
            .expect("non-empty");
        base.cases.remove(worst);
    }
    true
}
