use rand::distr::weighted::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{level_to_rate, LoadLevel, TrafficError};
use crate::bam::{BamConfig, Bandwidth, FlowId, FlowRequest};

/// One point of a discrete bandwidth-demand distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandPoint {
    pub bandwidth: Bandwidth,
    pub weight: f64,
}

impl DemandPoint {
    /// Uniform distribution over the given sizes.
    pub fn uniform(sizes: &[Bandwidth]) -> Vec<DemandPoint> {
        let weight = 1.0 / sizes.len() as f64;
        sizes.iter().map(|&bandwidth| DemandPoint { bandwidth, weight }).collect()
    }
}

/// Per-class flow characteristics that do not change across phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTraffic {
    pub mean_holding: f64,
    pub demand: Vec<DemandPoint>,
}

impl ClassTraffic {
    pub fn mean_bandwidth(&self) -> f64 {
        self.demand.iter().map(|d| d.bandwidth as f64 * d.weight).sum()
    }
}

impl Default for ClassTraffic {
    fn default() -> Self {
        Self { mean_holding: 1.0, demand: DemandPoint::uniform(&[1, 5, 10]) }
    }
}

/// A stretch of time with constant per-class arrival rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub dwell: f64,
    pub rates: Vec<f64>,
}

/// Poisson workload description. Phases repeat cyclically until `duration`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub classes: Vec<ClassTraffic>,
    pub duration: f64,
    pub phases: Vec<Phase>,
}

impl WorkloadSpec {
    /// Builds a phase schedule from per-class load levels, scaling each level against the
    /// reference constraint vector.
    pub fn from_levels(
        classes: Vec<ClassTraffic>,
        reference: &BamConfig,
        schedule: &[(Vec<LoadLevel>, f64)],
        duration: f64,
    ) -> Self {
        let phases = schedule
            .iter()
            .map(|(levels, dwell)| Phase {
                dwell: *dwell,
                rates: levels
                    .iter()
                    .zip(&classes)
                    .enumerate()
                    .map(|(c, (&level, traffic))| {
                        level_to_rate(level, c, reference, traffic.mean_bandwidth(), traffic.mean_holding).0
                    })
                    .collect(),
            })
            .collect();
        Self { classes, duration, phases }
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        let invalid = |msg: String| Err(TrafficError::InvalidSpec(msg));
        if self.classes.is_empty() {
            return invalid("no traffic classes".into());
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return invalid(format!("duration {} must be finite and non-negative", self.duration));
        }
        if self.phases.is_empty() {
            return invalid("phase schedule is empty".into());
        }
        for (c, class) in self.classes.iter().enumerate() {
            if !(class.mean_holding > 0.0 && class.mean_holding.is_finite()) {
                return invalid(format!("class {c}: mean holding time must be positive"));
            }
            if class.demand.is_empty() {
                return invalid(format!("class {c}: empty demand distribution"));
            }
            if class.demand.iter().any(|d| d.bandwidth == 0 || !(d.weight >= 0.0)) {
                return invalid(format!("class {c}: demands must be positive with non-negative weights"));
            }
            let total: f64 = class.demand.iter().map(|d| d.weight).sum();
            if (total - 1.0).abs() > 1e-9 {
                return invalid(format!("class {c}: demand weights sum to {total}, expected 1"));
            }
        }
        for (p, phase) in self.phases.iter().enumerate() {
            if !(phase.dwell > 0.0 && phase.dwell.is_finite()) {
                return invalid(format!("phase {p}: dwell time must be positive"));
            }
            if phase.rates.len() != self.classes.len() {
                return invalid(format!(
                    "phase {p}: {} rates for {} classes",
                    phase.rates.len(),
                    self.classes.len()
                ));
            }
            if let Some(c) = phase.rates.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
                return invalid(format!("phase {p}: arrival rate of class {c} must be positive"));
            }
        }
        Ok(())
    }

    /// Phase active at time `t` and the time it ends.
    fn phase_at(&self, t: f64) -> (usize, f64) {
        let cycle: f64 = self.phases.iter().map(|p| p.dwell).sum();
        let cycles = (t / cycle).floor();
        let mut end = cycles * cycle;
        for (i, phase) in self.phases.iter().enumerate() {
            end += phase.dwell;
            if t < end {
                return (i, end);
            }
        }
        (0, end + self.phases[0].dwell)
    }
}

/// Generates the request stream: independent Poisson arrivals per class with exponential
/// holding times, sorted by arrival time. Flow ids follow stream order. The same spec and
/// seed always produce the same stream.
pub fn build_workload(spec: &WorkloadSpec, seed: u64) -> Result<Vec<FlowRequest>, TrafficError> {
    spec.validate()?;
    let mut arrivals: Vec<(f64, usize, Bandwidth, f64)> = Vec::new();
    for (class, traffic) in spec.classes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(class as u64 + 1);
        let sizes = WeightedIndex::new(traffic.demand.iter().map(|d| d.weight))
            .map_err(|e| TrafficError::InvalidSpec(format!("class {class}: {e}")))?;
        let holding = Exp::new(1.0 / traffic.mean_holding).expect("validated positive");

        let mut t = 0.0;
        while t < spec.duration {
            let (phase, phase_end) = spec.phase_at(t);
            let gap = Exp::new(spec.phases[phase].rates[class]).expect("validated positive").sample(&mut rng);
            if t + gap >= phase_end {
                // memoryless: restart the clock at the boundary with the next phase's rate
                t = phase_end;
                continue;
            }
            t += gap;
            if t >= spec.duration {
                break;
            }
            let bandwidth = traffic.demand[sizes.sample(&mut rng)].bandwidth;
            let hold = holding.sample(&mut rng);
            arrivals.push((t, class, bandwidth, hold));
        }
    }
    arrivals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(arrivals
        .into_iter()
        .enumerate()
        .map(|(i, (arrival_time, class, bandwidth, holding_time))| FlowRequest {
            id: FlowId(i as u64),
            class,
            bandwidth,
            arrival_time,
            holding_time,
        })
        .collect())
}

/// SHA-256 over the exact bit patterns of a request stream, hex encoded.
pub fn stream_digest(stream: &[FlowRequest]) -> String {
    let mut hasher = Sha256::new();
    for r in stream {
        hasher.update(r.id.0.to_le_bytes());
        hasher.update((r.class as u64).to_le_bytes());
        hasher.update(r.bandwidth.to_le_bytes());
        hasher.update(r.arrival_time.to_bits().to_le_bytes());
        hasher.update(r.holding_time.to_bits().to_le_bytes());
    }
    hex::encode(hasher.finalize())
}
