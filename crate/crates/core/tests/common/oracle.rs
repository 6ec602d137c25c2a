//! A deliberately naive reference model of the three admission engines.
//!
//! The oracle keeps the flows of one link in arrival order and judges a request by trying
//! candidate end states directly against the model's constraints: first the state with the
//! new flow simply added, then every way of preempting the newest eligible flows of each
//! preemptable class. Nothing is shared with the production engines.

use std::collections::HashSet;

use cogbam_core::bam::{BamKind, BamParameters, Constraint, FlowId, LinkState, Verdict};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub id: FlowId,
    pub class: usize,
    pub bandwidth: u64,
    /// ATCS only: the flow sits on another class's idle share.
    pub borrowed: bool,
}

#[derive(Debug, Clone)]
pub struct Oracle {
    pub kind: BamKind,
    pub capacity: u64,
    pub bc: Vec<u64>,
    all_bc: [Vec<u64>; 3],
    /// Oldest first.
    pub flows: Vec<Flow>,
}

impl Oracle {
    pub fn new(params: &BamParameters, kind: BamKind) -> Self {
        let all_bc = [params.mam.clone(), params.rdm.clone(), params.atcs.clone()];
        let bc = all_bc[kind.index()].clone();
        Self { kind, capacity: params.capacity, bc, all_bc, flows: Vec::new() }
    }

    fn classes(&self) -> usize {
        self.bc.len()
    }

    fn used(flows: &[&Flow], class: usize) -> u64 {
        flows.iter().filter(|f| f.class == class).map(|f| f.bandwidth).sum()
    }

    fn native(flows: &[&Flow], class: usize) -> u64 {
        flows.iter().filter(|f| f.class == class && !f.borrowed).map(|f| f.bandwidth).sum()
    }

    /// Whether every constraint of the active model holds for `flows`.
    pub fn feasible(&self, flows: &[&Flow]) -> bool {
        let total: u64 = flows.iter().map(|f| f.bandwidth).sum();
        if total > self.capacity {
            return false;
        }
        let n = self.classes();
        match self.kind {
            BamKind::Mam => (0..n).all(|c| Self::used(flows, c) <= self.bc[c]),
            BamKind::Rdm => (0..n).all(|d| (0..=d).map(|c| Self::used(flows, c)).sum::<u64>() <= self.bc[d]),
            BamKind::Atcs => (0..n).all(|c| Self::native(flows, c) <= self.bc[c]),
        }
    }

    /// Classes a request of `class` may preempt from, highest priority first.
    fn preemptable(&self, class: usize, borrowed: bool) -> Vec<usize> {
        match self.kind {
            BamKind::Mam => vec![],
            BamKind::Rdm => (class + 1..self.classes()).collect(),
            BamKind::Atcs if borrowed => vec![],
            BamKind::Atcs => (0..self.classes()).filter(|&j| j != class).collect(),
        }
    }

    /// Flows of `class` that may be preempted, newest first.
    fn eligible(&self, class: usize) -> Vec<&Flow> {
        self.flows
            .iter()
            .rev()
            .filter(|f| f.class == class && (self.kind != BamKind::Atcs || f.borrowed))
            .collect()
    }

    fn incoming(&self, id: FlowId, class: usize, bandwidth: u64) -> Flow {
        let refs: Vec<&Flow> = self.flows.iter().collect();
        let borrowed = self.kind == BamKind::Atcs && Self::native(&refs, class) + bandwidth > self.bc[class];
        Flow { id, class, bandwidth, borrowed }
    }

    fn feasible_without(&self, removed: &[FlowId], new: &Flow) -> bool {
        let mut state: Vec<&Flow> = self.flows.iter().filter(|f| !removed.contains(&f.id)).collect();
        state.push(new);
        self.feasible(&state)
    }

    /// The verdict of the reference policy: admit outright if possible, otherwise preempt the
    /// fewest flows (newest first within a class, fewer flows from higher-priority classes on
    /// ties), otherwise reject.
    pub fn verdict(&self, id: FlowId, class: usize, bandwidth: u64) -> Verdict {
        let new = self.incoming(id, class, bandwidth);
        if self.feasible_without(&[], &new) {
            return Verdict::Admit;
        }
        let groups: Vec<Vec<&Flow>> = self.preemptable(class, new.borrowed).iter().map(|&j| self.eligible(j)).collect();
        let mut best: Option<(usize, Vec<usize>)> = None;
        let mut counts = vec![0usize; groups.len()];
        loop {
            let victims: Vec<FlowId> =
                groups.iter().zip(&counts).flat_map(|(g, &k)| g[..k].iter().map(|f| f.id)).collect();
            let total = victims.len();
            if total > 0 && self.feasible_without(&victims, &new) {
                let better = match &best {
                    None => true,
                    Some((t, c)) => total < *t || (total == *t && counts < *c),
                };
                if better {
                    best = Some((total, counts.clone()));
                }
            }
            // odometer over every count vector
            let mut i = 0;
            loop {
                if i == counts.len() {
                    return match best {
                        Some((_, c)) => Verdict::AdmitWithPreemption {
                            victims: groups.iter().zip(&c).flat_map(|(g, &k)| g[..k].iter().map(|f| f.id)).collect(),
                        },
                        None => Verdict::Reject { reason: self.reason(class, bandwidth) },
                    };
                }
                if counts[i] < groups[i].len() {
                    counts[i] += 1;
                    break;
                }
                counts[i] = 0;
                i += 1;
            }
        }
    }

    /// Whether *any* subset of the preemptable flows makes room, regardless of shape.
    pub fn any_subset_admits(&self, class: usize, bandwidth: u64) -> bool {
        let new = self.incoming(FlowId(u64::MAX), class, bandwidth);
        let pool: Vec<FlowId> = self
            .preemptable(class, new.borrowed)
            .iter()
            .flat_map(|&j| self.eligible(j))
            .map(|f| f.id)
            .collect();
        assert!(pool.len() < 20, "subset enumeration is exponential");
        (0u32..1 << pool.len()).any(|mask| {
            let removed: Vec<FlowId> = (0..pool.len()).filter(|i| mask & (1 << i) != 0).map(|i| pool[i]).collect();
            self.feasible_without(&removed, &new)
        })
    }

    fn reason(&self, class: usize, bandwidth: u64) -> Constraint {
        let refs: Vec<&Flow> = self.flows.iter().collect();
        let used = |c| Self::used(&refs, c);
        match self.kind {
            BamKind::Mam if used(class) + bandwidth > self.bc[class] => Constraint::ClassCap(class),
            BamKind::Mam | BamKind::Atcs => Constraint::Capacity,
            BamKind::Rdm => {
                // The innermost doll that stays full even with every lower-priority flow gone.
                let doll = (class..self.classes())
                    .find(|&d| {
                        let kept: u64 = (0..=class).map(used).sum();
                        kept + bandwidth > self.bc[d]
                    })
                    .expect("a rejected request overflows some doll");
                Constraint::Doll(doll)
            }
        }
    }

    /// Records the outcome of [`verdict`](Self::verdict).
    pub fn apply(&mut self, id: FlowId, class: usize, bandwidth: u64, verdict: &Verdict) {
        let new = self.incoming(id, class, bandwidth);
        match verdict {
            Verdict::Reject { .. } => {}
            Verdict::Admit => self.flows.push(new),
            Verdict::AdmitWithPreemption { victims } => {
                self.flows.retain(|f| !victims.contains(&f.id));
                self.flows.push(new);
            }
        }
    }

    /// Removes a flow. Under ATCS a freed native share turns the class's own loans back into
    /// native flows, oldest first, as far as the share allows.
    pub fn release(&mut self, id: FlowId) {
        let idx = self.flows.iter().position(|f| f.id == id).expect("released flow exists");
        let gone = self.flows.remove(idx);
        if self.kind == BamKind::Atcs && !gone.borrowed {
            let mut native: u64 =
                self.flows.iter().filter(|f| f.class == gone.class && !f.borrowed).map(|f| f.bandwidth).sum();
            for f in self.flows.iter_mut().filter(|f| f.class == gone.class && f.borrowed) {
                if native + f.bandwidth <= self.bc[gone.class] {
                    native += f.bandwidth;
                    f.borrowed = false;
                }
            }
        }
    }

    /// Switches model keeping every flow; entering ATCS re-tags flows first-fit, oldest first.
    pub fn switch_keep_all(&mut self, kind: BamKind) {
        if kind == self.kind {
            return;
        }
        self.kind = kind;
        self.bc = self.all_bc[kind.index()].clone();
        let mut native = vec![0; self.classes()];
        for f in &mut self.flows {
            f.borrowed = kind == BamKind::Atcs && native[f.class] + f.bandwidth > self.bc[f.class];
            if !f.borrowed {
                native[f.class] += f.bandwidth;
            }
        }
    }

    /// Whether the link holds exactly the oracle's flows with the same classes, sizes and
    /// native/borrowed tags.
    pub fn matches(&self, link: &LinkState) -> bool {
        let ours: Vec<(FlowId, usize, u64, bool)> =
            self.flows.iter().map(|f| (f.id, f.class, f.bandwidth, f.borrowed)).collect();
        let theirs: Vec<(FlowId, usize, u64, bool)> =
            link.allocations().iter().map(|a| (a.flow, a.class, a.bandwidth, a.is_borrowed())).collect();
        ours == theirs
    }
}

/// Victim lists compared as sets.
pub fn same_verdict(a: &Verdict, b: &Verdict) -> bool {
    match (a, b) {
        (Verdict::AdmitWithPreemption { victims: x }, Verdict::AdmitWithPreemption { victims: y }) => {
            let (mut x, mut y) = (x.clone(), y.clone());
            x.sort();
            y.sort();
            x == y
        }
        _ => a == b,
    }
}

#[derive(Debug, Default)]
pub struct SweepStats {
    /// Verdicts compared; each distinct (state, depth) pair is expanded once.
    pub decisions: u64,
    /// Distinct (state, remaining depth) pairs expanded.
    pub states: u64,
    pub admits: u64,
    pub preemptions: u64,
    pub rejects: u64,
    pub mismatches: Vec<String>,
}

/// Feeds every sequence of up to `max_len` requests (each class, each bandwidth) to a fresh
/// link of model `kind` and to the oracle, comparing every verdict and the resulting state.
///
/// Decisions depend on flow ids only as labels, so two prefixes that leave the same ordered
/// list of (class, bandwidth, tag) flows have identical futures; such a state is expanded once
/// per remaining depth. Every sequence is still covered.
pub fn exhaustive_sweep(params: &BamParameters, kind: BamKind, max_len: usize, bandwidths: &[u64]) -> SweepStats {
    let link = LinkState::new(params.clone(), kind).expect("valid parameters");
    let oracle = Oracle::new(params, kind);
    let mut stats = SweepStats::default();
    let mut path = Vec::new();
    let mut seen = HashSet::new();
    visit(&link, &oracle, max_len, bandwidths, &mut path, &mut seen, &mut stats);
    stats
}

fn visit(
    link: &LinkState,
    oracle: &Oracle,
    remaining: usize,
    bandwidths: &[u64],
    path: &mut Vec<(usize, u64)>,
    seen: &mut HashSet<(Vec<(usize, u64, bool)>, usize)>,
    stats: &mut SweepStats,
) {
    if remaining == 0 {
        return;
    }
    let key = (oracle.flows.iter().map(|f| (f.class, f.bandwidth, f.borrowed)).collect(), remaining);
    if !seen.insert(key) {
        return;
    }
    stats.states += 1;
    let id = path.len() as u64;
    for class in 0..oracle.bc.len() {
        for &b in bandwidths {
            let req = super::request(id, class, b);
            let got = link.evaluate(&req).expect("well-formed request").verdict;
            let want = oracle.verdict(req.id, class, b);
            stats.decisions += 1;
            match &want {
                Verdict::Admit => stats.admits += 1,
                Verdict::AdmitWithPreemption { .. } => stats.preemptions += 1,
                Verdict::Reject { .. } => stats.rejects += 1,
            }
            let admissible = oracle.any_subset_admits(class, b);
            if !same_verdict(&got, &want) || admissible == matches!(want, Verdict::Reject { .. }) {
                if stats.mismatches.len() < 10 {
                    stats.mismatches.push(format!(
                        "{kind:?} after {path:?}, request class {class} bw {b}: engine {got:?}, oracle {want:?}",
                        kind = oracle.kind
                    ));
                }
                continue;
            }
            let mut next_link = link.clone();
            next_link.admit(&req).expect("decision applies");
            let mut next_oracle = oracle.clone();
            next_oracle.apply(req.id, class, b, &want);
            if !next_oracle.matches(&next_link) || next_link.check_invariants().is_err() {
                if stats.mismatches.len() < 10 {
                    stats.mismatches.push(format!("{:?} state diverged after {path:?} + ({class}, {b})", oracle.kind));
                }
                continue;
            }
            path.push((class, b));
            visit(&next_link, &next_oracle, remaining - 1, bandwidths, path, seen, stats);
            path.pop();
        }
    }
}
