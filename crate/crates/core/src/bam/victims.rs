//! Preemption victim selection.
//!
//! Victims are always taken newest-first within a class. The search picks how many flows to
//! take from each candidate class so that every covering demand is met with the fewest victims;
//! among equally small sets the one taking fewer flows from higher-priority classes wins.

use super::{Bandwidth, FlowId};

/// Flows of one candidate class, newest first.
pub(crate) type Group = Vec<(FlowId, Bandwidth)>;

/// The listed groups must together release at least `need` units.
#[derive(Debug, Clone)]
pub(crate) struct Demand {
    pub groups: Vec<usize>,
    pub need: Bandwidth,
}

/// `groups` must be ordered from highest to lowest priority.
pub(crate) fn select_minimal(groups: &[Group], demands: &[Demand]) -> Option<Vec<FlowId>> {
    let prefix: Vec<Vec<Bandwidth>> = groups
        .iter()
        .map(|g| {
            std::iter::once(0)
                .chain(g.iter().scan(0, |acc, &(_, b)| {
                    *acc += b;
                    Some(*acc)
                }))
                .collect()
        })
        .collect();

    let full: Vec<usize> = groups.iter().map(Vec::len).collect();
    if !satisfied(&prefix, demands, &full) {
        return None;
    }
    if groups.is_empty() {
        return Some(Vec::new());
    }

    let mut search = Search { prefix: &prefix, demands, best: None, counts: vec![0; groups.len()] };
    search.descend(0, 0);
    let (_, counts) = search.best?;
    Some(
        groups
            .iter()
            .zip(&counts)
            .flat_map(|(g, &k)| g[..k].iter().map(|&(id, _)| id))
            .collect(),
    )
}

fn satisfied(prefix: &[Vec<Bandwidth>], demands: &[Demand], counts: &[usize]) -> bool {
    demands
        .iter()
        .all(|d| d.groups.iter().map(|&g| prefix[g][counts[g]]).sum::<Bandwidth>() >= d.need)
}

struct Search<'a> {
    prefix: &'a [Vec<Bandwidth>],
    demands: &'a [Demand],
    best: Option<(usize, Vec<usize>)>,
    counts: Vec<usize>,
}

impl Search<'_> {
    fn bound(&self) -> usize {
        self.best.as_ref().map_or(usize::MAX, |(total, _)| *total)
    }

    fn descend(&mut self, group: usize, taken: usize) {
        let last = group + 1 == self.prefix.len();
        let available = self.prefix[group].len() - 1;
        for k in 0..=available {
            if taken + k >= self.bound() {
                return;
            }
            self.counts[group] = k;
            if last {
                if satisfied(self.prefix, self.demands, &self.counts) {
                    self.best = Some((taken + k, self.counts.clone()));
                    break;
                }
            } else {
                // Remaining groups taken in full must still be able to close every demand.
                for g in group + 1..self.prefix.len() {
                    self.counts[g] = self.prefix[g].len() - 1;
                }
                if satisfied(self.prefix, self.demands, &self.counts) {
                    self.descend(group + 1, taken + k);
                }
            }
        }
        self.counts[group] = 0;
    }
}
