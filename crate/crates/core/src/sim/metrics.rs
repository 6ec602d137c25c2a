use crate::bam::{BamKind, Bandwidth};
use crate::cognitive::MetricsSnapshot;

use super::SimError;

/// Utilization at or above which a link counts as congested for the loss proxy.
pub const LOSS_UTILIZATION: f64 = 0.98;

/// Request counts collected over one epoch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EpochCounts {
    pub arrivals: Vec<u64>,
    pub rejects: Vec<u64>,
    pub preemptions: u64,
}

impl EpochCounts {
    pub fn new(classes: usize) -> Self {
        Self { arrivals: vec![0; classes], rejects: vec![0; classes], preemptions: 0 }
    }
}

/// Builds the snapshot of one epoch.
///
/// `trace` is the piecewise-constant total bandwidth in use: each `(t, used)` holds from `t`
/// until the next point (or the end of the window). Points before the window start carry
/// their value into it. `capacity` is the summed capacity of all links, which makes the
/// utilization a capacity-weighted mean.
pub fn compute_epoch_metrics(
    epoch: usize,
    trace: &[(f64, Bandwidth)],
    capacity: Bandwidth,
    window: (f64, f64),
    counts: &EpochCounts,
    active_bam: BamKind,
) -> Result<MetricsSnapshot, SimError> {
    let (start, end) = window;
    let length = end - start;
    if !(length > 0.0) || capacity == 0 {
        return Err(SimError::EmptyWindow);
    }
    let mut area = 0.0;
    let mut congested = 0.0;
    for (i, &(t, used)) in trace.iter().enumerate() {
        let next = trace.get(i + 1).map_or(end, |p| p.0);
        let dt = next.min(end) - t.max(start);
        if dt <= 0.0 {
            continue;
        }
        area += used as f64 * dt;
        if used as f64 >= LOSS_UTILIZATION * capacity as f64 {
            congested += dt;
        }
    }
    let blocking = counts
        .arrivals
        .iter()
        .zip(&counts.rejects)
        .map(|(&a, &r)| if a == 0 { 0.0 } else { r as f64 / a as f64 })
        .collect();
    Ok(MetricsSnapshot {
        epoch,
        utilization: (area / (capacity as f64 * length)).clamp(0.0, 1.0),
        blocking,
        preemptions: counts.preemptions,
        loss_proxy: (congested / length).clamp(0.0, 1.0),
        active_bam,
    })
}
