//! Maximum Allocation Model: private per-class caps, no sharing.

use super::{Bandwidth, ClassId, Constraint, Decision, FlowId, LinkState};

pub(super) fn evaluate(link: &LinkState, class: ClassId, bandwidth: Bandwidth) -> Decision {
    let bc = link.bc();
    if link.used(class) + bandwidth > bc[class] {
        return Decision::reject(Constraint::ClassCap(class));
    }
    // Only binds when the caps overbook the link.
    if link.used_total() + bandwidth > link.capacity() {
        return Decision::reject(Constraint::Capacity);
    }
    Decision::admit(None)
}

/// Preempts each class's newest flows until its cap holds, lowest priority first.
pub(super) fn enforce(link: &mut LinkState) -> Vec<FlowId> {
    let mut victims = Vec::new();
    for class in (0..link.classes()).rev() {
        while link.used(class) > link.bc()[class] {
            victims.extend(link.remove_newest(class));
        }
    }
    victims
}
