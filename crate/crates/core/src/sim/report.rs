use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bam::BamKind;
use crate::cognitive::MetricsSnapshot;
use crate::scenario::ScenarioConfig;
use crate::traffic::TrafficProfile;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Everything observed and decided in one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub start: f64,
    pub end: f64,
    pub metrics: MetricsSnapshot,
    /// Requests per class arriving in the epoch.
    pub offered: Vec<u64>,
    pub rejected: Vec<u64>,
    /// Offered load per class relative to its reference bandwidth.
    pub normalized_load: Vec<f64>,
    pub profile: TrafficProfile,
    /// Model chosen for the next epoch.
    pub decision: BamKind,
    pub switched: bool,
    /// Reward of this epoch under the manager policy.
    pub reward: f64,
    /// Flows established at the end of the epoch.
    pub established: u64,
}

/// Run totals. Everything except `occupancy`, `admits` and `departures` covers only the
/// epochs after the warm-up; `occupancy` partitions the whole run by active model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub duration: f64,
    pub measured_epochs: usize,
    pub measured_time: f64,
    pub utilization: f64,
    pub loss_proxy: f64,
    pub offered: Vec<u64>,
    pub rejected: Vec<u64>,
    /// Rejected / offered per class; absent for a class without arrivals.
    pub blocking: Vec<Option<f64>>,
    pub preemptions: u64,
    pub switches: u64,
    /// Time-weighted mean epoch reward; absent when no epoch was measured.
    pub mean_reward: Option<f64>,
    pub occupancy: BTreeMap<BamKind, f64>,
    pub admits: u64,
    pub departures: u64,
}

impl Totals {
    pub(super) fn from_epochs(
        epochs: &[EpochRecord],
        warmup: usize,
        classes: usize,
        occupancy: BTreeMap<BamKind, f64>,
        admits: u64,
        departures: u64,
    ) -> Self {
        let measured: Vec<&EpochRecord> = epochs.iter().skip(warmup).collect();
        let time: f64 = measured.iter().map(|e| e.end - e.start).sum();
        let weighted = |f: &dyn Fn(&EpochRecord) -> f64| -> Option<f64> {
            (time > 0.0).then(|| measured.iter().map(|e| f(e) * (e.end - e.start)).sum::<f64>() / time)
        };
        let mut offered = vec![0; classes];
        let mut rejected = vec![0; classes];
        for e in &measured {
            for c in 0..classes {
                offered[c] += e.offered[c];
                rejected[c] += e.rejected[c];
            }
        }
        Totals {
            duration: epochs.last().map_or(0.0, |e| e.end),
            measured_epochs: measured.len(),
            measured_time: time,
            utilization: weighted(&|e| e.metrics.utilization).unwrap_or(0.0),
            loss_proxy: weighted(&|e| e.metrics.loss_proxy).unwrap_or(0.0),
            blocking: offered.iter().zip(&rejected).map(|(&o, &r)| (o > 0).then(|| r as f64 / o as f64)).collect(),
            offered,
            rejected,
            preemptions: measured.iter().map(|e| e.metrics.preemptions).sum(),
            switches: measured.iter().filter(|e| e.switched).count() as u64,
            mean_reward: weighted(&|e| e.reward),
            occupancy,
            admits,
            departures,
        }
    }
}

/// Result of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub seed: u64,
    pub controller: String,
    /// SHA-256 of the generated request stream.
    pub workload_digest: String,
    pub arrivals: u64,
    pub epochs: Vec<EpochRecord>,
    pub totals: Totals,
    /// The scenario the run was produced from.
    pub scenario: ScenarioConfig,
}

impl RunReport {
    /// JSON with object keys sorted at every level; equal reports give identical bytes.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report is serializable");
        let mut text = serde_json::to_string_pretty(&value).expect("value is serializable");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One row per epoch followed by a `total` footer row.
    pub fn to_csv(&self) -> String {
        let classes = self.totals.offered.len();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> =
            ["epoch", "start", "end", "active_bam", "utilization", "loss_proxy", "preemptions"].map(String::from).to_vec();
        header.extend((0..classes).map(|c| format!("blocking_tc{c}")));
        header.extend(["profile", "regime", "decision", "switched", "reward"].map(String::from));
        w.write_record(&header).expect("in-memory write");

        for e in &self.epochs {
            let mut row = vec![
                e.epoch.to_string(),
                e.start.to_string(),
                e.end.to_string(),
                e.metrics.active_bam.to_string(),
                e.metrics.utilization.to_string(),
                e.metrics.loss_proxy.to_string(),
                e.metrics.preemptions.to_string(),
            ];
            row.extend(e.metrics.blocking.iter().map(ToString::to_string));
            row.push(e.profile.profile_id.map(|p| p.to_string()).unwrap_or_default());
            row.push(format!("{:?}", e.profile.regime));
            row.push(e.decision.to_string());
            row.push(e.switched.to_string());
            row.push(e.reward.to_string());
            w.write_record(&row).expect("in-memory write");
        }

        let t = &self.totals;
        let mut footer = vec![
            "total".to_string(),
            String::new(),
            t.duration.to_string(),
            String::new(),
            t.utilization.to_string(),
            t.loss_proxy.to_string(),
            t.preemptions.to_string(),
        ];
        footer.extend(t.blocking.iter().map(|b| b.map(|x| x.to_string()).unwrap_or_default()));
        footer.extend([String::new(), String::new(), String::new(), t.switches.to_string()]);
        footer.push(t.mean_reward.map(|r| r.to_string()).unwrap_or_default());
        w.write_record(&footer).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}
