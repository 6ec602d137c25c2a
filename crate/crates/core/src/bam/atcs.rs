//! AllocTC-Sharing: native shares summing to `C`, plus loans of idle share in both priority
//! directions.
//!
//! A request that fits its class's native share is native; otherwise it is a loan. Loans are
//! admitted while the link has room and are the only allocations that can be preempted: a
//! native arrival reclaims capacity from borrowed flows of the other classes.

use super::victims::{self, Demand, Group};
use super::{Bandwidth, ClassId, Constraint, Decision, LinkState};

pub(super) fn evaluate(link: &LinkState, class: ClassId, bandwidth: Bandwidth) -> Decision {
    let fits_native = link.native(class) + bandwidth <= link.bc()[class];
    let total = link.used_total() + bandwidth;
    if total <= link.capacity() {
        let lender = if fits_native { None } else { Some(pick_lender(link, class)) };
        return Decision::admit(lender);
    }
    if !fits_native {
        // A loan never preempts.
        return Decision::reject(Constraint::Capacity);
    }
    let groups: Vec<Group> = (0..link.classes())
        .filter(|&j| j != class)
        .map(|j| link.newest_first(j).filter(|a| a.is_borrowed()).map(|a| (a.flow, a.bandwidth)).collect())
        .collect();
    let demand = Demand { groups: (0..groups.len()).collect(), need: total - link.capacity() };
    match victims::select_minimal(&groups, &[demand]) {
        Some(victims) => Decision::preempt(victims),
        None => Decision::reject(Constraint::Capacity),
    }
}

/// The other class with the most idle share; ties go to the lowest priority.
fn pick_lender(link: &LinkState, class: ClassId) -> ClassId {
    let ledger = link.loan_ledger();
    let bc = link.bc();
    (0..link.classes())
        .rev()
        .filter(|&l| l != class)
        .max_by_key(|&l| (bc[l].saturating_sub(link.native(l) + ledger.loaned_out(l)), l))
        .expect("ATCS needs at least two classes to lend")
}

/// Turns borrowed allocations of `class` back into native ones, oldest first, while the
/// native share has room.
pub(super) fn promote(link: &mut LinkState, class: ClassId) {
    let share = link.bc()[class];
    for idx in 0..link.allocations().len() {
        let a = &link.allocations()[idx];
        if a.class == class && a.is_borrowed() && link.native(class) + a.bandwidth <= share {
            link.set_lender(idx, None);
        }
    }
}

/// Recomputes native/borrowed tags after switching into ATCS: first fit, oldest first.
pub(super) fn retag(link: &mut LinkState) {
    let bc = link.bc().to_vec();
    let mut native = vec![0; link.classes()];
    let borrowed: Vec<bool> = link
        .allocations()
        .iter()
        .map(|a| {
            if native[a.class] + a.bandwidth <= bc[a.class] {
                native[a.class] += a.bandwidth;
                false
            } else {
                true
            }
        })
        .collect();
    for (idx, _) in borrowed.iter().enumerate().filter(|(_, b)| !**b) {
        link.set_lender(idx, None);
    }
    for (idx, _) in borrowed.iter().enumerate().filter(|(_, b)| **b) {
        let lender = pick_lender(link, link.allocations()[idx].class);
        link.set_lender(idx, Some(lender));
    }
}
