use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    atcs, mam, rdm, Allocation, BamError, BamKind, BamParameters, Bandwidth, ClassId, Constraint, Decision,
    FlowId, FlowRequest, Verdict,
};

/// What happens to in-flight allocations when the active model changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchMode {
    /// Existing allocations are grandfathered; the new constraints only gate future admissions.
    #[default]
    KeepAll,
    /// Allocations violating the new model are preempted until its invariants hold.
    EnforceNew,
}

/// A broken link invariant.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("{constraint} exceeded: {used} > {limit}")]
    Exceeded { constraint: Constraint, used: Bandwidth, limit: Bandwidth },
    #[error("derived totals out of sync with the allocation set")]
    Totals,
    #[error("{flow} has invalid lender {lender:?} under {bam}")]
    Lender { flow: FlowId, lender: Option<ClassId>, bam: BamKind },
    #[error("{0} allocated twice")]
    Duplicate(FlowId),
    #[error("{units} borrowed units cannot be backed by idle shares")]
    UnbackedLoan { units: Bandwidth },
}

/// Class-level loan accounting under ATCS.
///
/// `loans[borrower][lender]` holds the borrowed units of `borrower` charged to `lender`'s
/// idle share. Other lenders are charged first; a borrower's own idle share backs whatever
/// remains (this happens after natives of the lenders arrived without needing preemption).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoanLedger {
    pub loans: Vec<Vec<Bandwidth>>,
    pub unbacked: Bandwidth,
}

impl LoanLedger {
    pub fn loaned_out(&self, lender: ClassId) -> Bandwidth {
        self.loans.iter().map(|row| row[lender]).sum()
    }

    pub fn borrowed(&self, borrower: ClassId) -> Bandwidth {
        self.loans[borrower].iter().sum()
    }
}

/// Allocation state of one link: the bandwidth broker's ground truth.
///
/// Allocations are kept in admission order, so "newest" is always the tail of a class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    params: BamParameters,
    active: BamKind,
    allocations: Vec<Allocation>,
    used: Vec<Bandwidth>,
    native: Vec<Bandwidth>,
}

impl LinkState {
    pub fn new(params: BamParameters, active: BamKind) -> Result<Self, BamError> {
        if let Some(err) = params.validate().into_iter().next() {
            return Err(err.into());
        }
        let classes = params.classes();
        Ok(Self { params, active, allocations: Vec::new(), used: vec![0; classes], native: vec![0; classes] })
    }

    pub fn params(&self) -> &BamParameters {
        &self.params
    }

    pub fn active_bam(&self) -> BamKind {
        self.active
    }

    pub fn classes(&self) -> usize {
        self.used.len()
    }

    pub fn capacity(&self) -> Bandwidth {
        self.params.capacity
    }

    /// Constraint vector of the active model.
    pub fn bc(&self) -> &[Bandwidth] {
        self.params.bc(self.active)
    }

    pub fn allocations(&self) -> &[Allocation] {
        &self.allocations
    }

    pub fn allocation(&self, flow: FlowId) -> Option<&Allocation> {
        self.allocations.iter().find(|a| a.flow == flow)
    }

    pub fn contains(&self, flow: FlowId) -> bool {
        self.allocation(flow).is_some()
    }

    pub fn used(&self, class: ClassId) -> Bandwidth {
        self.used[class]
    }

    pub fn used_per_class(&self) -> &[Bandwidth] {
        &self.used
    }

    pub fn used_total(&self) -> Bandwidth {
        self.used.iter().sum()
    }

    /// Bandwidth of class `class` held without a lender.
    pub fn native(&self, class: ClassId) -> Bandwidth {
        self.native[class]
    }

    pub fn borrowed(&self, class: ClassId) -> Bandwidth {
        self.used[class] - self.native[class]
    }

    pub fn utilization(&self) -> f64 {
        self.used_total() as f64 / self.capacity() as f64
    }

    /// Computes the admission decision for `req` without changing the link.
    pub fn evaluate(&self, req: &FlowRequest) -> Result<Decision, BamError> {
        if req.bandwidth == 0 {
            return Err(BamError::NonPositiveBandwidth);
        }
        if req.class >= self.classes() {
            return Err(BamError::UnknownClass { class: req.class, classes: self.classes() });
        }
        if self.contains(req.id) {
            return Err(BamError::DuplicateFlowId(req.id));
        }
        Ok(match self.active {
            BamKind::Mam => mam::evaluate(self, req.class, req.bandwidth),
            BamKind::Rdm => rdm::evaluate(self, req.class, req.bandwidth),
            BamKind::Atcs => atcs::evaluate(self, req.class, req.bandwidth),
        })
    }

    /// Applies a decision previously computed by [`evaluate`](Self::evaluate) on this exact
    /// state. Victims are removed first, then the allocation is inserted. Returns the removed
    /// victim allocations. A rejection leaves the link untouched.
    pub fn apply(&mut self, req: &FlowRequest, decision: &Decision) -> Result<Vec<Allocation>, BamError> {
        if !decision.is_admitted() {
            return Ok(Vec::new());
        }
        if self.contains(req.id) {
            return Err(BamError::DuplicateFlowId(req.id));
        }
        if decision.victims().iter().any(|v| !self.contains(*v)) {
            return Err(BamError::StaleDecision);
        }
        let removed = decision
            .victims()
            .iter()
            .map(|&v| {
                let idx = self.position(v).expect("checked above");
                self.remove_at(idx)
            })
            .collect();
        self.insert(Allocation {
            flow: req.id,
            class: req.class,
            bandwidth: req.bandwidth,
            lender: decision.lender,
            admitted_at: req.arrival_time,
        });
        Ok(removed)
    }

    /// Evaluates and applies `req` in one step.
    pub fn admit(&mut self, req: &FlowRequest) -> Result<Decision, BamError> {
        let decision = self.evaluate(req)?;
        self.apply(req, &decision)?;
        Ok(decision)
    }

    /// Removes a flow. Under ATCS the freed native share is used to re-home the class's own
    /// borrowed allocations (oldest first).
    pub fn release(&mut self, flow: FlowId) -> Result<Allocation, BamError> {
        let idx = self.position(flow).ok_or(BamError::UnknownFlowId(flow))?;
        let removed = self.remove_at(idx);
        if self.active == BamKind::Atcs && !removed.is_borrowed() {
            atcs::promote(self, removed.class);
        }
        Ok(removed)
    }

    /// Changes the active model. Returns the flows preempted to satisfy the new model (always
    /// empty for [`SwitchMode::KeepAll`] and when `new` is already active).
    pub fn switch_bam(&mut self, new: BamKind, mode: SwitchMode) -> Vec<FlowId> {
        if new == self.active {
            return Vec::new();
        }
        self.active = new;
        match new {
            BamKind::Atcs => {
                atcs::retag(self);
                Vec::new()
            }
            BamKind::Mam | BamKind::Rdm => {
                for idx in 0..self.allocations.len() {
                    self.set_lender(idx, None);
                }
                match (mode, new) {
                    (SwitchMode::KeepAll, _) => Vec::new(),
                    (SwitchMode::EnforceNew, BamKind::Mam) => mam::enforce(self),
                    (SwitchMode::EnforceNew, _) => rdm::enforce(self),
                }
            }
        }
    }

    /// Amount by which each constraint of the active model is exceeded. Only non-zero entries
    /// are returned; a fresh or consistently driven link yields an empty list. Grandfathered
    /// allocations after a [`SwitchMode::KeepAll`] switch show up here.
    pub fn excess(&self) -> Vec<(Constraint, Bandwidth)> {
        let bc = self.bc();
        let mut out = Vec::new();
        let mut push = |constraint, used: Bandwidth, limit: Bandwidth| {
            if used > limit {
                out.push((constraint, used - limit));
            }
        };
        push(Constraint::Capacity, self.used_total(), self.capacity());
        match self.active {
            BamKind::Mam => {
                for c in 0..self.classes() {
                    push(Constraint::ClassCap(c), self.used[c], bc[c]);
                }
            }
            BamKind::Rdm => {
                let mut cumulative = 0;
                for c in 0..self.classes() {
                    cumulative += self.used[c];
                    push(Constraint::Doll(c), cumulative, bc[c]);
                }
            }
            BamKind::Atcs => {
                for c in 0..self.classes() {
                    push(Constraint::NativeShare(c), self.native[c], bc[c]);
                }
            }
        }
        out
    }

    /// Checks bookkeeping plus every constraint of the active model.
    pub fn check_invariants(&self) -> Result<(), Violation> {
        self.check_bookkeeping()?;
        if let Some(&(constraint, _)) = self.excess().first() {
            let (used, limit) = self.constraint_usage(constraint);
            return Err(Violation::Exceeded { constraint, used, limit });
        }
        Ok(())
    }

    /// Structural invariants that hold regardless of grandfathering: derived totals match the
    /// allocation set, ids are unique, lenders are valid, capacity is respected and (under
    /// ATCS) every borrowed unit is backed by an idle share.
    pub fn check_bookkeeping(&self) -> Result<(), Violation> {
        let mut used = vec![0; self.classes()];
        let mut native = vec![0; self.classes()];
        let mut ids = std::collections::HashSet::new();
        for a in &self.allocations {
            if !ids.insert(a.flow) {
                return Err(Violation::Duplicate(a.flow));
            }
            used[a.class] += a.bandwidth;
            match a.lender {
                None => native[a.class] += a.bandwidth,
                Some(l) if self.active == BamKind::Atcs && l != a.class && l < self.classes() => {}
                lender => return Err(Violation::Lender { flow: a.flow, lender, bam: self.active }),
            }
        }
        if used != self.used || native != self.native {
            return Err(Violation::Totals);
        }
        if self.used_total() > self.capacity() {
            return Err(Violation::Exceeded {
                constraint: Constraint::Capacity,
                used: self.used_total(),
                limit: self.capacity(),
            });
        }
        if self.active == BamKind::Atcs {
            let ledger = self.loan_ledger();
            if ledger.unbacked > 0 {
                return Err(Violation::UnbackedLoan { units: ledger.unbacked });
            }
        }
        Ok(())
    }

    /// Charges every borrowed unit to an idle share. Allocations are charged oldest first,
    /// to their recorded lender, then to the other classes lowest priority first, and finally
    /// to the borrower's own idle share.
    pub fn loan_ledger(&self) -> LoanLedger {
        let n = self.classes();
        let bc = self.params.bc(BamKind::Atcs);
        let mut idle: Vec<Bandwidth> = (0..n).map(|l| bc[l].saturating_sub(self.native[l])).collect();
        let mut loans = vec![vec![0; n]; n];
        let mut unbacked = 0;
        for a in self.allocations.iter().filter(|a| a.is_borrowed()) {
            let mut demand = a.bandwidth;
            let others = (0..n).rev().filter(|&l| l != a.class && Some(l) != a.lender);
            let lenders = a.lender.into_iter().chain(others).chain(std::iter::once(a.class));
            for lender in lenders {
                let take = demand.min(idle[lender]);
                loans[a.class][lender] += take;
                idle[lender] -= take;
                demand -= take;
            }
            unbacked += demand;
        }
        LoanLedger { loans, unbacked }
    }

    fn constraint_usage(&self, constraint: Constraint) -> (Bandwidth, Bandwidth) {
        let bc = self.bc();
        match constraint {
            Constraint::Capacity => (self.used_total(), self.capacity()),
            Constraint::ClassCap(c) => (self.used[c], bc[c]),
            Constraint::Doll(c) => (self.used[..=c].iter().sum(), bc[c]),
            Constraint::NativeShare(c) => (self.native[c], bc[c]),
        }
    }

    /// Flows of `class`, newest first.
    pub(super) fn newest_first(&self, class: ClassId) -> impl Iterator<Item = &Allocation> {
        self.allocations.iter().rev().filter(move |a| a.class == class)
    }

    pub(super) fn remove_newest(&mut self, class: ClassId) -> Option<FlowId> {
        let idx = self.allocations.iter().rposition(|a| a.class == class)?;
        Some(self.remove_at(idx).flow)
    }

    pub(super) fn set_lender(&mut self, idx: usize, lender: Option<ClassId>) {
        let a = &mut self.allocations[idx];
        match (a.lender.is_some(), lender.is_some()) {
            (true, false) => self.native[a.class] += a.bandwidth,
            (false, true) => self.native[a.class] -= a.bandwidth,
            _ => {}
        }
        a.lender = lender;
    }

    fn position(&self, flow: FlowId) -> Option<usize> {
        self.allocations.iter().position(|a| a.flow == flow)
    }

    fn insert(&mut self, allocation: Allocation) {
        self.used[allocation.class] += allocation.bandwidth;
        if allocation.lender.is_none() {
            self.native[allocation.class] += allocation.bandwidth;
        }
        self.allocations.push(allocation);
    }

    fn remove_at(&mut self, idx: usize) -> Allocation {
        let a = self.allocations.remove(idx);
        self.used[a.class] -= a.bandwidth;
        if a.lender.is_none() {
            self.native[a.class] -= a.bandwidth;
        }
        a
    }
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Admit => "admit",
            Verdict::AdmitWithPreemption { .. } => "admit_with_preemption",
            Verdict::Reject { .. } => "reject",
        }
    }
}
