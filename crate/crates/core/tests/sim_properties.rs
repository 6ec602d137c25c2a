use cogbam_core::bam::{BamKind, SwitchMode};
use cogbam_core::cognitive::ControllerMode;
use cogbam_core::scenario::{PhaseSection, ScenarioConfig};
use cogbam_core::sim::{run, RunReport};
use cogbam_core::traffic::LoadLevel;
use proptest::prelude::*;

const MODES: [ControllerMode; 6] = [
    ControllerMode::Static(BamKind::Mam),
    ControllerMode::Static(BamKind::Rdm),
    ControllerMode::Static(BamKind::Atcs),
    ControllerMode::Rules,
    ControllerMode::Cbr,
    ControllerMode::Rl,
];

/// Structural checks every report must pass.
fn check_report(report: &RunReport) -> Result<(), String> {
    let s = &report.scenario;
    let t = &report.totals;
    let mut expected_start = 0.0;
    for (i, e) in report.epochs.iter().enumerate() {
        if e.epoch != i || e.start != expected_start || !(e.end > e.start) {
            return Err(format!("epoch {i} bounds {}..{}", e.start, e.end));
        }
        expected_start = e.end;
        if !(0.0..=1.0).contains(&e.metrics.utilization) || !(0.0..=1.0).contains(&e.metrics.loss_proxy) {
            return Err(format!("epoch {i}: metrics out of range"));
        }
        if e.rejected.iter().zip(&e.offered).any(|(r, o)| r > o) {
            return Err(format!("epoch {i}: more rejections than arrivals"));
        }
        if e.switched != (e.decision != e.metrics.active_bam) {
            return Err(format!("epoch {i}: switch flag disagrees with the decision"));
        }
        if let Some(next) = report.epochs.get(i + 1) {
            if next.metrics.active_bam != e.decision {
                return Err(format!("epoch {i}: decision {} not applied", e.decision));
            }
        }
        if let ControllerMode::Static(b) = s.controller.mode {
            if e.metrics.active_bam != b && i > 0 {
                return Err(format!("static controller left {b}"));
            }
        }
    }
    if report.epochs.last().map_or(0.0, |e| e.end) != s.duration {
        return Err("epochs do not cover the run".into());
    }
    let occupancy: f64 = t.occupancy.values().sum();
    if (occupancy - s.duration).abs() > 1e-6 * s.duration.max(1.0) {
        return Err(format!("occupancy {occupancy} != duration {}", s.duration));
    }
    if !(0.0..=1.0).contains(&t.utilization) {
        return Err("run utilization out of range".into());
    }
    if s.warmup_epochs == 0 {
        let established = report.epochs.last().map_or(0, |e| e.established);
        if t.admits - t.departures - t.preemptions != established {
            return Err("admits - departures - preemptions != established".into());
        }
        let offered: u64 = t.offered.iter().sum();
        if offered != report.arrivals {
            return Err(format!("{offered} offered of {} arrivals", report.arrivals));
        }
    }
    Ok(())
}

/// Long runs for every controller and both switch modes; each covers more than 10^5 events.
#[test]
fn long_runs_are_consistent_for_every_controller() {
    for mode in MODES {
        for switch_mode in [SwitchMode::KeepAll, SwitchMode::EnforceNew] {
            let mut s = ScenarioConfig::three_class(
                vec![PhaseSection::profile(1, 400.0), PhaseSection::profile(2, 400.0), PhaseSection::profile(4, 400.0)],
                3600.0,
                mode,
            );
            s.warmup_epochs = 0;
            s.bam.switch_mode = switch_mode;
            let report = run(&s, 21).unwrap();
            check_report(&report).unwrap_or_else(|e| panic!("{mode} {switch_mode:?}: {e}"));
            let events = report.arrivals + report.totals.admits + report.epochs.len() as u64;
            assert!(events > 100_000, "{mode}: only {events} events");
        }
    }
}

#[test]
fn report_json_round_trips_byte_for_byte() {
    let s = ScenarioConfig::three_class(vec![PhaseSection::profile(3, 400.0)], 1200.0, ControllerMode::Rl);
    let report = run(&s, 2).unwrap();
    let text = report.to_canonical_json();
    let parsed = RunReport::from_json(&text).unwrap();
    assert_eq!(parsed.to_canonical_json(), text);
}

fn level() -> impl Strategy<Value = LoadLevel> {
    prop_oneof![Just(LoadLevel::Low), Just(LoadLevel::Medium), Just(LoadLevel::High)]
}

/// Random valid scenarios: capacity, constraint vectors, phases, controller and switch mode.
fn scenario() -> impl Strategy<Value = ScenarioConfig> {
    (
        50u64..400,
        prop::collection::vec(0.2..1.0f64, 3),
        prop::collection::vec(0.0..1.0f64, 2),
        prop::collection::vec(0.1..1.0f64, 3),
        prop::collection::vec((prop::collection::vec(level(), 3), 50.0..400.0f64), 1..4),
        (0usize..6, 0usize..3, any::<bool>()),
        (100.0..1500.0f64, 20.0..150.0f64, 0usize..4),
    )
        .prop_map(|(capacity, mam, rdm, atcs, phases, (mode, initial, enforce), (duration, epoch, warmup))| {
            let c = capacity as f64;
            let mam: Vec<u64> = mam.iter().map(|f| ((f * c) as u64).max(1)).collect();
            let mut cuts: Vec<u64> = rdm.iter().map(|f| (f * c) as u64).collect();
            cuts.sort();
            let rdm = vec![cuts[0], cuts[1], capacity];
            let weight: f64 = atcs.iter().sum();
            let mut shares: Vec<u64> = atcs.iter().map(|w| (w / weight * c) as u64).collect();
            shares[2] = capacity - shares[0] - shares[1];
            let mut s = ScenarioConfig::three_class(
                phases.into_iter().map(|(levels, dwell)| PhaseSection::levels(levels, dwell)).collect(),
                duration,
                MODES[mode],
            );
            s.bam.capacity = capacity;
            s.bam.mam = mam;
            s.bam.rdm = rdm;
            s.bam.atcs = shares;
            s.bam.initial = BamKind::ALL[initial];
            s.bam.switch_mode = if enforce { SwitchMode::EnforceNew } else { SwitchMode::KeepAll };
            s.workload.reference_bc = None;
            s.epoch_length = epoch;
            s.warmup_epochs = warmup;
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_scenarios_run_cleanly(s in scenario(), seed in 0u64..1000) {
        prop_assert_eq!(s.validate(), vec![]);
        let report = run(&s, seed).unwrap();
        if let Err(e) = check_report(&report) {
            prop_assert!(false, "{}", e);
        }
        let again = run(&s, seed).unwrap();
        prop_assert_eq!(again.to_canonical_json(), report.to_canonical_json());
    }
}
