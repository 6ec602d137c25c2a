//! Randomized drivers for the link engines and the deployment plane, with constraint checks
//! written directly against the allocation ledgers.

use std::collections::BTreeSet;

use cogbam_core::bam::{BamKind, BamParameters, Constraint, FlowId, FlowRequest, LinkState, SwitchMode};
use cogbam_core::plane::{Network, SwitchTarget, Topology};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A 100-unit link; the MAM caps overbook it.
pub fn fuzz_params() -> BamParameters {
    BamParameters::new(100, vec![50, 40, 30], vec![60, 85, 100], vec![50, 30, 20])
}

/// Every constraint of the active model violated by `link`, computed from its allocations.
pub fn violations(link: &LinkState) -> Vec<String> {
    let n = link.classes();
    let bc = link.bc();
    let mut used = vec![0u64; n];
    let mut native = vec![0u64; n];
    for a in link.allocations() {
        used[a.class] += a.bandwidth;
        if !a.is_borrowed() {
            native[a.class] += a.bandwidth;
        }
    }
    let total: u64 = used.iter().sum();
    let mut out = Vec::new();
    if total > link.capacity() {
        out.push(format!("capacity: {total} > {}", link.capacity()));
    }
    match link.active_bam() {
        BamKind::Mam => {
            for c in 0..n {
                if used[c] > bc[c] {
                    out.push(format!("MAM cap {c}: {} > {}", used[c], bc[c]));
                }
            }
        }
        BamKind::Rdm => {
            for d in 0..n {
                let inner: u64 = used[..=d].iter().sum();
                if inner > bc[d] {
                    out.push(format!("RDM doll {d}: {inner} > {}", bc[d]));
                }
            }
        }
        BamKind::Atcs => {
            for c in 0..n {
                if native[c] > bc[c] {
                    out.push(format!("ATCS native share {c}: {} > {}", native[c], bc[c]));
                }
            }
            // Every borrowed unit must be covered by some class's idle share.
            let borrowed: u64 = used.iter().zip(&native).map(|(u, v)| u - v).sum();
            let idle: u64 = (0..n).map(|c| bc[c].saturating_sub(native[c])).sum();
            if borrowed > idle {
                out.push(format!("ATCS loans: {borrowed} borrowed > {idle} idle"));
            }
        }
    }
    if link.active_bam() != BamKind::Atcs && link.allocations().iter().any(|a| a.is_borrowed()) {
        out.push("borrowed allocation outside ATCS".into());
    }
    out
}

#[derive(Debug, Default)]
pub struct FuzzStats {
    pub ops: u64,
    pub admits: u64,
    pub preemptions: u64,
    pub rejects: u64,
    pub releases: u64,
    pub switches: u64,
    pub violations: Vec<String>,
}

impl FuzzStats {
    fn fail(&mut self, msg: String) {
        if self.violations.len() < 10 {
            self.violations.push(msg);
        }
    }
}

/// Random admissions, releases and model switches on one link starting under `kind`.
///
/// After every operation the ledger is checked. Switches into MAM or RDM use either switch
/// mode; after a grandfathering switch the link may legitimately exceed the new model's
/// constraints, and then admissions and releases must never make any excess larger.
pub fn safety_fuzz(kind: BamKind, ops: u64, seed: u64) -> FuzzStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut link = LinkState::new(fuzz_params(), kind).expect("valid parameters");
    let mut stats = FuzzStats::default();
    let mut live: Vec<FlowId> = Vec::new();
    let mut next_id = 0u64;
    // Whether the link is known to satisfy every constraint of its model.
    let mut clean = true;

    for op in 0..ops {
        stats.ops += 1;
        let before: Vec<(Constraint, u64)> = link.excess();
        let roll = rng.random_range(0..100);
        if roll < 55 {
            let req = FlowRequest {
                id: FlowId(next_id),
                class: rng.random_range(0..3),
                bandwidth: rng.random_range(1..=20),
                arrival_time: op as f64,
                holding_time: 1.0,
            };
            next_id += 1;
            let decision = link.admit(&req).expect("well-formed request");
            if decision.is_admitted() {
                stats.admits += 1;
                live.push(req.id);
            } else {
                stats.rejects += 1;
            }
            if !decision.victims().is_empty() {
                stats.preemptions += decision.victims().len() as u64;
                live.retain(|f| !decision.victims().contains(f));
            }
        } else if roll < 92 {
            if live.is_empty() {
                continue;
            }
            let flow = live.swap_remove(rng.random_range(0..live.len()));
            link.release(flow).expect("live flow");
            stats.releases += 1;
        } else {
            let target = *BamKind::ALL.choose(&mut rng).expect("non-empty");
            let mode = if rng.random_bool(0.5) { SwitchMode::KeepAll } else { SwitchMode::EnforceNew };
            let changed = target != link.active_bam();
            let removed = link.switch_bam(target, mode);
            live.retain(|f| !removed.contains(f));
            stats.preemptions += removed.len() as u64;
            if changed {
                stats.switches += 1;
                clean = mode == SwitchMode::EnforceNew || target == BamKind::Atcs || link.excess().is_empty();
                if clean && !violations(&link).is_empty() {
                    stats.fail(format!("op {op}: switch to {target} left {:?}", violations(&link)));
                }
            }
            if let Err(v) = link.check_bookkeeping() {
                stats.fail(format!("op {op}: bookkeeping {v:?}"));
            }
            continue;
        }

        if let Err(v) = link.check_bookkeeping() {
            stats.fail(format!("op {op}: bookkeeping {v:?}"));
        }
        if clean {
            let found = violations(&link);
            if !found.is_empty() || link.check_invariants().is_err() {
                stats.fail(format!("op {op} under {}: {found:?}", link.active_bam()));
            }
        } else {
            for (constraint, amount) in link.excess() {
                let previous = before.iter().find(|(c, _)| *c == constraint).map_or(0, |(_, e)| *e);
                if amount > previous {
                    stats.fail(format!("op {op}: excess on {constraint} grew from {previous} to {amount}"));
                }
            }
            clean = link.excess().is_empty();
        }
    }
    stats
}

/// Compares every link ledger with the established paths: each flow must be held by exactly
/// the links of its route, and nothing else may be allocated.
pub fn ledger_scan(net: &Network, topology: &Topology) -> Result<(), String> {
    let mut holders: std::collections::BTreeMap<FlowId, BTreeSet<String>> = Default::default();
    for (spec, link) in topology.links.iter().zip(net.links()) {
        for a in link.allocations() {
            if !holders.entry(a.flow).or_default().insert(spec.id.clone()) {
                return Err(format!("{} allocated twice on {}", a.flow, spec.id));
            }
        }
    }
    for (flow, links) in &holders {
        let path = net.path(*flow).ok_or_else(|| format!("{flow} allocated on {links:?} without a path"))?;
        let route = topology.routes.iter().find(|r| r.id == path.route).ok_or("path on unknown route")?;
        let expected: BTreeSet<String> = route.links.iter().cloned().collect();
        if &expected != links {
            return Err(format!("{flow} partially allocated: {links:?} of {expected:?}"));
        }
    }
    if net.paths().len() != holders.len() {
        return Err(format!("{} paths but {} allocated flows", net.paths().len(), holders.len()));
    }
    net.check_coherence()
}

#[derive(Debug, Default)]
pub struct ChainStats {
    pub ops: u64,
    pub setups: u64,
    pub multi_link_setups: u64,
    pub rejects: u64,
    pub rollbacks_with_changes: u64,
    pub preempted: u64,
    pub teardowns: u64,
    pub switches: u64,
    pub failures: Vec<String>,
}

/// Random setups, teardowns and switches on a 3-link chain, with a ledger scan after every
/// operation and a full-state comparison after every rejected setup.
pub fn chain_fuzz(ops: u64, seed: u64) -> ChainStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topology = Topology::chain(3);
    // (route id, first link, hop count)
    let routes: Vec<(String, String, usize)> =
        topology.routes.iter().map(|r| (r.id.clone(), r.links[0].clone(), r.links.len())).collect();
    let mut net = Network::new(topology.clone(), fuzz_params(), BamKind::Rdm).expect("valid network");
    let mut stats = ChainStats::default();
    let mut next_id = 0u64;

    for op in 0..ops {
        stats.ops += 1;
        let roll = rng.random_range(0..100);
        if roll < 60 {
            let (route, first, len) = routes.choose(&mut rng).expect("routes").clone();
            let req = FlowRequest {
                id: FlowId(next_id),
                class: rng.random_range(0..3),
                bandwidth: rng.random_range(1..=25),
                arrival_time: op as f64,
                holding_time: 1.0,
            };
            next_id += 1;
            let before = net.links().to_vec();
            let paths_before = net.paths().clone();
            let decision = net.setup_path(&req, &route).expect("well-formed request");
            stats.setups += 1;
            if len > 1 {
                stats.multi_link_setups += 1;
            }
            if decision.is_admitted() {
                stats.preempted += decision.preempted().len() as u64;
                for v in decision.preempted() {
                    if net.path(*v).is_some() {
                        stats.failures.push(format!("op {op}: victim {v} still has a path"));
                    }
                }
            } else {
                stats.rejects += 1;
                if net.links() != before.as_slice() || net.paths() != &paths_before {
                    stats.failures.push(format!("op {op}: rejected setup on {route} changed the network"));
                }
                // Refused past the first hop: earlier hops had admitted and were rolled back.
                if decision.blocking_link.as_ref() != Some(&first) {
                    stats.rollbacks_with_changes += 1;
                }
            }
        } else if roll < 92 {
            let flows: Vec<FlowId> = net.paths().keys().copied().collect();
            if let Some(&flow) = flows.choose(&mut rng) {
                net.teardown_path(flow).expect("established flow");
                stats.teardowns += 1;
            }
        } else {
            let kind = *BamKind::ALL.choose(&mut rng).expect("non-empty");
            let mode = if rng.random_bool(0.5) { SwitchMode::KeepAll } else { SwitchMode::EnforceNew };
            let target = if rng.random_bool(0.5) {
                SwitchTarget::All
            } else {
                SwitchTarget::Link(format!("L{}", rng.random_range(0..3)))
            };
            let outcome = net.apply_bam_switch(&target, kind, mode).expect("known link");
            stats.switches += outcome.changed_links.len() as u64;
            stats.preempted += outcome.preempted.len() as u64;
        }
        if let Err(e) = ledger_scan(&net, &topology) {
            if stats.failures.len() < 10 {
                stats.failures.push(format!("op {op}: {e}"));
            }
        }
    }
    stats
}
