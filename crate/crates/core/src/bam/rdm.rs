//! Russian Dolls Model: doll `c` bounds the cumulative usage of classes `0..=c`.
//!
//! An arrival of class `c` touches dolls `c..N`. Any doll it would overflow can only be
//! relieved by preempting strictly lower-priority classes inside that doll.

use super::victims::{self, Demand, Group};
use super::{Bandwidth, ClassId, Constraint, Decision, FlowId, LinkState};

pub(super) fn evaluate(link: &LinkState, class: ClassId, bandwidth: Bandwidth) -> Decision {
    let bc = link.bc();
    let n = link.classes();
    let mut cumulative: Bandwidth = link.used_per_class()[..class].iter().sum();
    let mut demands = Vec::new();
    for doll in class..n {
        cumulative += link.used(doll);
        let load = cumulative + bandwidth;
        if load > bc[doll] {
            if doll == class {
                return Decision::reject(Constraint::Doll(doll));
            }
            // groups are indexed from class + 1
            demands.push((doll, Demand { groups: (0..doll - class).collect(), need: load - bc[doll] }));
        }
    }
    if demands.is_empty() {
        return Decision::admit(None);
    }

    let groups: Vec<Group> = (class + 1..n)
        .map(|j| link.newest_first(j).map(|a| (a.flow, a.bandwidth)).collect())
        .collect();
    let plain: Vec<Demand> = demands.iter().map(|(_, d)| d.clone()).collect();
    match victims::select_minimal(&groups, &plain) {
        Some(victims) => Decision::preempt(victims),
        None => {
            // Report the innermost doll that cannot be relieved even by preempting everything.
            let doll = demands
                .iter()
                .find(|(_, d)| {
                    d.groups.iter().map(|&g| groups[g].iter().map(|&(_, b)| b).sum::<Bandwidth>()).sum::<Bandwidth>()
                        < d.need
                })
                .map_or(n - 1, |(doll, _)| *doll);
            Decision::reject(Constraint::Doll(doll))
        }
    }
}

/// Preempts lowest-priority classes first (newest first within a class) until every doll holds.
pub(super) fn enforce(link: &mut LinkState) -> Vec<FlowId> {
    let mut victims = Vec::new();
    for class in (0..link.classes()).rev() {
        while outer_doll_violated(link, class) {
            match link.remove_newest(class) {
                Some(v) => victims.push(v),
                None => break,
            }
        }
    }
    victims
}

/// Whether any doll containing `class` is overflowing.
fn outer_doll_violated(link: &LinkState, class: ClassId) -> bool {
    let bc = link.bc();
    let mut cumulative: Bandwidth = link.used_per_class()[..class].iter().sum();
    (class..link.classes()).any(|doll| {
        cumulative += link.used(doll);
        cumulative > bc[doll]
    })
}
