//! Deterministic discrete-event simulation of a network under a BAM-selection controller.
//!
//! A run replays a seeded Poisson workload against the deployment plane. At every epoch
//! boundary it measures the epoch, classifies the observed traffic profile, lets the controller
//! pick the active BAM, applies any switch network-wide and finally hands the controller the
//! reward of the epoch that just ended (credited to the decision taken one epoch earlier).

mod events;
mod metrics;
mod report;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

use crate::bam::{BamKind, Verdict};
use crate::cognitive::{reward, CognitiveError, Controller, ControllerMemory, Observation};
use crate::plane::{Network, PlaneError, SwitchTarget};
use crate::scenario::{FieldError, ScenarioConfig};
use crate::traffic::{build_workload, classify_profile, stream_digest, ObservationWindow, TrafficError};

pub use events::{Event, EventKind};
pub use metrics::{compute_epoch_metrics, EpochCounts, LOSS_UTILIZATION};
pub use report::{EpochRecord, RunReport, Totals, REPORT_SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidScenario(Vec<FieldError>),
    #[error("monitoring window is empty")]
    EmptyWindow,
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Plane(#[from] PlaneError),
    #[error(transparent)]
    Cognitive(#[from] CognitiveError),
}

/// Runs `scenario` with a fresh controller memory.
pub fn run(scenario: &ScenarioConfig, seed: u64) -> Result<RunReport, SimError> {
    run_with_memory(scenario, seed, None).map(|(report, _)| report)
}

/// Runs `scenario`, optionally warm-starting the controller from `memory`. Returns the report
/// and the controller memory at the end of the run.
pub fn run_with_memory(
    scenario: &ScenarioConfig,
    seed: u64,
    memory: Option<ControllerMemory>,
) -> Result<(RunReport, ControllerMemory), SimError> {
    let problems = scenario.validate();
    if !problems.is_empty() {
        return Err(SimError::InvalidScenario(problems));
    }
    let classes = scenario.classes();
    let stream = build_workload(&scenario.workload_spec(), seed)?;
    let digest = stream_digest(&stream);
    let routes = scenario.class_routes();
    let reference: Vec<f64> = scenario.reference().iter().map(|&b| b as f64).collect();

    let mut net = Network::new(scenario.topology.clone(), scenario.params(), scenario.bam.initial)?;
    let capacity = net.total_capacity();
    let ctl = &scenario.controller;
    let mut controller = Controller::new(ctl.mode, ctl.cbr.clone(), ctl.rl.clone(), seed)?;
    if let Some(memory) = memory {
        controller.import_memory(memory)?;
    }

    let mut queue: BinaryHeap<Reverse<Event>> = BinaryHeap::with_capacity(stream.len() * 2);
    let mut seq = 0u64;
    let mut push = |queue: &mut BinaryHeap<Reverse<Event>>, time: f64, kind: EventKind| {
        queue.push(Reverse(Event { time, kind, seq }));
        seq += 1;
    };
    for (i, r) in stream.iter().enumerate() {
        push(&mut queue, r.arrival_time, EventKind::Arrival(i));
    }
    let duration = scenario.duration;
    let epoch_length = scenario.epoch_length;
    if duration > 0.0 {
        let mut k = 1u64;
        loop {
            let t = k as f64 * epoch_length;
            if t >= duration - 1e-9 * epoch_length {
                break;
            }
            push(&mut queue, t, EventKind::EpochTick);
            k += 1;
        }
        push(&mut queue, duration, EventKind::EpochTick);
    }

    let mut epochs: Vec<EpochRecord> = Vec::new();
    let mut occupancy: BTreeMap<BamKind, f64> = BamKind::ALL.iter().map(|&b| (b, 0.0)).collect();
    let mut counts = EpochCounts::new(classes);
    let mut offered_load = vec![0.0; classes];
    let mut trace = vec![(0.0, 0)];
    let mut epoch_start = 0.0;
    let mut last_t = 0.0;
    let mut current = scenario.bam.initial;
    let mut switched_last = false;
    let (mut admits, mut departures, mut preempted_total) = (0u64, 0u64, 0u64);

    while let Some(Reverse(event)) = queue.pop() {
        let t = event.time;
        *occupancy.get_mut(&current).expect("all models present") += t - last_t;
        last_t = t;
        match event.kind {
            EventKind::Arrival(i) => {
                let req = &stream[i];
                counts.arrivals[req.class] += 1;
                offered_load[req.class] += req.bandwidth as f64 * req.holding_time;
                let decision = net.setup_path(req, &routes[req.class])?;
                match &decision.verdict {
                    Verdict::Reject { .. } => counts.rejects[req.class] += 1,
                    verdict => {
                        admits += 1;
                        if let Verdict::AdmitWithPreemption { victims } = verdict {
                            counts.preemptions += victims.len() as u64;
                            preempted_total += victims.len() as u64;
                        }
                        push(&mut queue, t + req.holding_time, EventKind::Departure(req.id));
                        trace.push((t, net.total_used()));
                    }
                }
            }
            EventKind::Departure(flow) => {
                if net.path(flow).is_some() {
                    net.teardown_path(flow)?;
                    departures += 1;
                    trace.push((t, net.total_used()));
                }
            }
            EventKind::EpochTick => {
                let index = epochs.len();
                let length = t - epoch_start;
                let is_final = t >= duration;
                let metrics = compute_epoch_metrics(index, &trace, capacity, (epoch_start, t), &counts, current)?;
                let window = ObservationWindow {
                    offered_load: offered_load.iter().map(|rho| rho / length).collect(),
                    reference: reference.clone(),
                    utilization: metrics.utilization,
                    length,
                };
                let profile = classify_profile(&window)?;
                let epoch_reward = reward(&metrics, &scenario.policy, switched_last);
                let offered: u64 = counts.arrivals.iter().sum();
                let rejected: u64 = counts.rejects.iter().sum();
                let aggregate_blocking = if offered == 0 { 0.0 } else { rejected as f64 / offered as f64 };
                let obs = Observation::new(
                    index,
                    profile.clone(),
                    &window.normalized_loads(),
                    metrics.utilization,
                    aggregate_blocking,
                );
                let decision = if is_final { current } else { controller.decide(&obs, current) };

                epochs.push(EpochRecord {
                    epoch: index,
                    start: epoch_start,
                    end: t,
                    metrics,
                    offered: counts.arrivals.clone(),
                    rejected: counts.rejects.clone(),
                    normalized_load: window.normalized_loads(),
                    profile,
                    decision,
                    switched: decision != current,
                    reward: epoch_reward,
                    established: net.paths().len() as u64,
                });
                counts = EpochCounts::new(classes);
                offered_load.iter_mut().for_each(|x| *x = 0.0);
                epoch_start = t;

                switched_last = decision != current;
                if switched_last {
                    let outcome = net.apply_bam_switch(&SwitchTarget::All, decision, scenario.bam.switch_mode)?;
                    counts.preemptions += outcome.preempted.len() as u64;
                    preempted_total += outcome.preempted.len() as u64;
                    current = decision;
                }
                trace.clear();
                trace.push((t, net.total_used()));
                controller.learn(epoch_reward, &obs);
                if is_final {
                    break;
                }
            }
        }
    }

    debug_assert_eq!(admits - departures - preempted_total, net.paths().len() as u64);
    let totals = Totals::from_epochs(&epochs, scenario.warmup_epochs, classes, occupancy, admits, departures);
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seed,
        controller: ctl.mode.to_string(),
        workload_digest: digest,
        arrivals: stream.len() as u64,
        epochs,
        totals,
        scenario: scenario.clone(),
    };
    Ok((report, controller.export_memory()))
}
