use std::cmp::Ordering;

use crate::bam::FlowId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// End of a monitoring epoch.
    EpochTick,
    /// Scheduled end of an admitted flow; ignored if the flow was preempted meanwhile.
    Departure(FlowId),
    /// Arrival of the request at this index of the workload stream.
    Arrival(usize),
}

impl EventKind {
    fn rank(self) -> u8 {
        match self {
            EventKind::EpochTick => 0,
            EventKind::Departure(_) => 1,
            EventKind::Arrival(_) => 2,
        }
    }
}

/// A timed event. Events order by time, then tick < departure < arrival, then insertion
/// sequence, so simultaneous events are processed deterministically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub seq: u64,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.rank().cmp(&other.kind.rank()))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
