//! Helpers shared by the integration test targets.
#![allow(dead_code)]

pub mod fuzz;
pub mod oracle;

use cogbam_core::bam::{BamKind, BamParameters, FlowId, FlowRequest};
use cogbam_core::cognitive::{indicated_bam, rl_decide, rl_update, QTable, RlParams, RlState};
use cogbam_core::traffic::TrafficProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The small link used by the exhaustive and fuzz suites. The MAM caps overbook the link so
/// the capacity check can bind as well as the per-class caps.
pub fn small_params() -> BamParameters {
    BamParameters::new(10, vec![6, 5, 4], vec![6, 8, 10], vec![4, 3, 3])
}

pub fn request(id: u64, class: usize, bandwidth: u64) -> FlowRequest {
    FlowRequest { id: FlowId(id), class, bandwidth, arrival_time: id as f64, holding_time: 1.0 }
}

pub const MODELS: [BamKind; 3] = [BamKind::Mam, BamKind::Rdm, BamKind::Atcs];

/// Reward of the synthetic bandit: models recommended for the profile pay 0.8, others 0.3.
pub fn bandit_reward(profile: &TrafficProfile, action: BamKind) -> f64 {
    if indicated_bam(profile).contains(&action) {
        0.8
    } else {
        0.3
    }
}

/// Trains a Q-table on the six reference profiles (drawn uniformly) for `updates` steps with
/// epsilon-greedy exploration. Returns, per profile, whether the greedy model is recommended.
pub fn rl_bandit(params: RlParams, updates: usize, seed: u64) -> Vec<bool> {
    let profiles: Vec<TrafficProfile> = (1..=6).map(|id| TrafficProfile::reference(id).expect("reference id")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = QTable::new(params);
    for _ in 0..updates {
        let profile = &profiles[rng.random_range(0..profiles.len())];
        let state = RlState::of(profile);
        let action = rl_decide(&q, state, &mut rng);
        let next = RlState::of(&profiles[rng.random_range(0..profiles.len())]);
        rl_update(&mut q, state, action, bandit_reward(profile, action), next);
    }
    profiles.iter().map(|p| indicated_bam(p).contains(&q.greedy(RlState::of(p)))).collect()
}
