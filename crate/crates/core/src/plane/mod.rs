//! Logically centralized deployment plane.
//!
//! A [`Network`] owns one [`LinkState`] per directed link and a static route table. Every change
//! of link state goes through one of three mutating operations — [`Network::setup_path`],
//! [`Network::teardown_path`] and [`Network::apply_bam_switch`] — which keep paths atomic:
//! a flow is either allocated on every link of its route or on none.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bam::{
    BamError, BamKind, BamParameters, Bandwidth, ClassId, Constraint, FlowId, FlowRequest, LinkState, SwitchMode,
    Verdict,
};

/// Directed link between two nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub id: String,
    pub from: String,
    pub to: String,
}

/// Static route: an ordered, contiguous list of link ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteSpec {
    pub id: String,
    pub links: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<String>,
    pub links: Vec<LinkSpec>,
    pub routes: Vec<RouteSpec>,
}

impl Default for Topology {
    /// One link `L0` from `A` to `B` and one route `r0` over it.
    fn default() -> Self {
        Self {
            nodes: vec!["A".into(), "B".into()],
            links: vec![LinkSpec { id: "L0".into(), from: "A".into(), to: "B".into() }],
            routes: vec![RouteSpec { id: "r0".into(), links: vec!["L0".into()] }],
        }
    }
}

impl Topology {
    /// A chain `N0 -> N1 -> ... -> Nk` of `k` links named `L0..`, with one route per
    /// contiguous sub-chain, named `r<first>_<last>`.
    pub fn chain(k: usize) -> Self {
        let nodes: Vec<String> = (0..=k).map(|i| format!("N{i}")).collect();
        let links = (0..k)
            .map(|i| LinkSpec { id: format!("L{i}"), from: nodes[i].clone(), to: nodes[i + 1].clone() })
            .collect();
        let mut routes = Vec::new();
        for first in 0..k {
            for last in first..k {
                routes.push(RouteSpec {
                    id: format!("r{first}_{last}"),
                    links: (first..=last).map(|i| format!("L{i}")).collect(),
                });
            }
        }
        Self { nodes, links, routes }
    }

    /// All structural problems, as `(field path, message)` pairs.
    pub fn problems(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let nodes: BTreeSet<&str> = self.nodes.iter().map(String::as_str).collect();
        if nodes.len() != self.nodes.len() {
            out.push(("nodes".into(), "node names must be unique".into()));
        }
        if self.links.is_empty() {
            out.push(("links".into(), "at least one link is required".into()));
        }
        let mut links: HashMap<&str, &LinkSpec> = HashMap::new();
        for (i, link) in self.links.iter().enumerate() {
            for (field, node) in [("from", &link.from), ("to", &link.to)] {
                if !nodes.contains(node.as_str()) {
                    out.push((format!("links[{i}].{field}"), format!("unknown node `{node}`")));
                }
            }
            if links.insert(link.id.as_str(), link).is_some() {
                out.push((format!("links[{i}].id"), format!("duplicate link id `{}`", link.id)));
            }
        }
        if self.routes.is_empty() {
            out.push(("routes".into(), "at least one route is required".into()));
        }
        let mut route_ids = BTreeSet::new();
        for (r, route) in self.routes.iter().enumerate() {
            if !route_ids.insert(route.id.as_str()) {
                out.push((format!("routes[{r}].id"), format!("duplicate route id `{}`", route.id)));
            }
            if route.links.is_empty() {
                out.push((format!("routes[{r}].links"), "route must contain at least one link".into()));
            }
            let mut seen = BTreeSet::new();
            for (j, id) in route.links.iter().enumerate() {
                if !links.contains_key(id.as_str()) {
                    out.push((format!("routes[{r}].links[{j}]"), format!("unknown link `{id}`")));
                } else if !seen.insert(id.as_str()) {
                    out.push((format!("routes[{r}].links[{j}]"), format!("link `{id}` appears twice")));
                }
            }
            for (j, pair) in route.links.windows(2).enumerate() {
                if let (Some(a), Some(b)) = (links.get(pair[0].as_str()), links.get(pair[1].as_str())) {
                    if a.to != b.from {
                        out.push((
                            format!("routes[{r}].links[{}]", j + 1),
                            format!("link `{}` does not start where `{}` ends", b.id, a.id),
                        ));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlaneError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("unknown route `{0}`")]
    UnknownRoute(String),
    #[error("unknown link `{0}`")]
    UnknownLink(String),
    #[error("{0} is already established")]
    DuplicateFlowId(FlowId),
    #[error("{0} is not established")]
    UnknownFlowId(FlowId),
    #[error(transparent)]
    Bam(#[from] BamError),
}

/// Which links a BAM switch applies to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SwitchTarget {
    All,
    Link(String),
}

/// Cumulative operation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub admits: u64,
    pub rejects: u64,
    /// Flows torn down involuntarily, counted once per flow even when it spans several links.
    pub preemptions: u64,
    /// Per-link BAM changes.
    pub switches: u64,
    pub teardowns: u64,
}

/// A flow established over a route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstablishedPath {
    pub route: String,
    pub links: Vec<String>,
    pub class: ClassId,
    pub bandwidth: Bandwidth,
}

/// Result of a path setup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathDecision {
    /// Network-level verdict; for preemption it lists every flow torn down, on any link.
    pub verdict: Verdict,
    /// Link that refused the request.
    pub blocking_link: Option<String>,
}

impl PathDecision {
    pub fn is_admitted(&self) -> bool {
        !matches!(self.verdict, Verdict::Reject { .. })
    }

    pub fn preempted(&self) -> &[FlowId] {
        match &self.verdict {
            Verdict::AdmitWithPreemption { victims } => victims,
            _ => &[],
        }
    }
}

/// Result of a BAM switch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SwitchOutcome {
    /// Links whose active model changed.
    pub changed_links: Vec<String>,
    /// Flows torn down to satisfy the new model.
    pub preempted: Vec<FlowId>,
}

/// Kind of the last mutating operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operation {
    Setup,
    Teardown,
    Switch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkView {
    pub id: String,
    pub active_bam: BamKind,
    pub capacity: Bandwidth,
    pub used_per_class: Vec<Bandwidth>,
    pub utilization: f64,
}

/// Read-only global view of the network between operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkView {
    pub links: Vec<LinkView>,
    /// Established flows and the links they hold, in route order.
    pub paths: BTreeMap<FlowId, Vec<String>>,
    pub counters: Counters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    topology: Topology,
    links: Vec<LinkState>,
    link_index: HashMap<String, usize>,
    routes: HashMap<String, Vec<usize>>,
    paths: BTreeMap<FlowId, EstablishedPath>,
    counters: Counters,
    version: u64,
    last_operation: Option<Operation>,
}

impl Network {
    /// Builds a network whose links all start with the same parameters and active model.
    pub fn new(topology: Topology, params: BamParameters, initial: BamKind) -> Result<Self, PlaneError> {
        if let Some((path, msg)) = topology.problems().into_iter().next() {
            return Err(PlaneError::InvalidTopology(format!("{path}: {msg}")));
        }
        let link_index: HashMap<String, usize> =
            topology.links.iter().enumerate().map(|(i, l)| (l.id.clone(), i)).collect();
        let routes = topology
            .routes
            .iter()
            .map(|r| (r.id.clone(), r.links.iter().map(|l| link_index[l]).collect()))
            .collect();
        let links = topology
            .links
            .iter()
            .map(|_| LinkState::new(params.clone(), initial))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            topology,
            links,
            link_index,
            routes,
            paths: BTreeMap::new(),
            counters: Counters::default(),
            version: 0,
            last_operation: None,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn links(&self) -> &[LinkState] {
        &self.links
    }

    pub fn link(&self, id: &str) -> Option<&LinkState> {
        self.link_index.get(id).map(|&i| &self.links[i])
    }

    pub fn paths(&self) -> &BTreeMap<FlowId, EstablishedPath> {
        &self.paths
    }

    pub fn path(&self, flow: FlowId) -> Option<&EstablishedPath> {
        self.paths.get(&flow)
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    /// Number of mutating operations applied so far.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn last_operation(&self) -> Option<Operation> {
        self.last_operation
    }

    /// The model active on every link, or `None` when links disagree.
    pub fn active_bam(&self) -> Option<BamKind> {
        let first = self.links[0].active_bam();
        self.links.iter().all(|l| l.active_bam() == first).then_some(first)
    }

    pub fn total_capacity(&self) -> Bandwidth {
        self.links.iter().map(LinkState::capacity).sum()
    }

    pub fn total_used(&self) -> Bandwidth {
        self.links.iter().map(LinkState::used_total).sum()
    }

    /// Capacity-weighted mean utilization over all links.
    pub fn utilization(&self) -> f64 {
        self.total_used() as f64 / self.total_capacity() as f64
    }

    fn record(&mut self, op: Operation) {
        self.version += 1;
        self.last_operation = Some(op);
    }

    /// Removes `flow` from every link of its path except `skip`.
    fn cascade(&mut self, flow: FlowId, skip: Option<usize>) {
        let path = self.paths.remove(&flow).expect("allocations always belong to an established path");
        for id in &path.links {
            let l = self.link_index[id];
            if Some(l) != skip {
                self.links[l].release(flow).expect("path links hold the flow");
            }
        }
    }

    /// Admits `req` on every link of `route`, all or nothing. Per-link preemptions tear the
    /// victims down on their whole path. If any link refuses, every link touched so far is
    /// restored and the request is rejected.
    pub fn setup_path(&mut self, req: &FlowRequest, route: &str) -> Result<PathDecision, PlaneError> {
        let route_links = self.routes.get(route).ok_or_else(|| PlaneError::UnknownRoute(route.to_string()))?.clone();
        if self.paths.contains_key(&req.id) {
            return Err(PlaneError::DuplicateFlowId(req.id));
        }
        let single = route_links.len() == 1;
        let saved = (!single).then(|| (self.links.clone(), self.paths.clone()));

        let mut victims = Vec::new();
        for &l in &route_links {
            let decision = match self.links[l].evaluate(req) {
                Ok(d) => d,
                Err(e) => {
                    if let Some((links, paths)) = saved {
                        self.links = links;
                        self.paths = paths;
                    }
                    return Err(e.into());
                }
            };
            if let Verdict::Reject { reason } = decision.verdict {
                if let Some((links, paths)) = saved {
                    self.links = links;
                    self.paths = paths;
                }
                self.counters.rejects += 1;
                self.record(Operation::Setup);
                return Ok(PathDecision {
                    verdict: Verdict::Reject { reason },
                    blocking_link: Some(self.topology.links[l].id.clone()),
                });
            }
            let removed = self.links[l].apply(req, &decision)?;
            for victim in removed {
                self.cascade(victim.flow, Some(l));
                victims.push(victim.flow);
            }
        }

        self.paths.insert(
            req.id,
            EstablishedPath {
                route: route.to_string(),
                links: route_links.iter().map(|&l| self.topology.links[l].id.clone()).collect(),
                class: req.class,
                bandwidth: req.bandwidth,
            },
        );
        self.counters.admits += 1;
        self.counters.preemptions += victims.len() as u64;
        self.record(Operation::Setup);
        let verdict = if victims.is_empty() { Verdict::Admit } else { Verdict::AdmitWithPreemption { victims } };
        Ok(PathDecision { verdict, blocking_link: None })
    }

    /// Removes an established flow from every link of its route.
    pub fn teardown_path(&mut self, flow: FlowId) -> Result<EstablishedPath, PlaneError> {
        let path = self.paths.get(&flow).ok_or(PlaneError::UnknownFlowId(flow))?.clone();
        self.cascade(flow, None);
        self.counters.teardowns += 1;
        self.record(Operation::Teardown);
        Ok(path)
    }

    /// Switches the model on one link or on all of them. Flows preempted on any link are torn
    /// down on their whole path.
    pub fn apply_bam_switch(
        &mut self,
        target: &SwitchTarget,
        kind: BamKind,
        mode: SwitchMode,
    ) -> Result<SwitchOutcome, PlaneError> {
        let targets: Vec<usize> = match target {
            SwitchTarget::All => (0..self.links.len()).collect(),
            SwitchTarget::Link(id) => {
                vec![*self.link_index.get(id).ok_or_else(|| PlaneError::UnknownLink(id.clone()))?]
            }
        };
        let mut outcome = SwitchOutcome::default();
        for l in targets {
            if self.links[l].active_bam() == kind {
                continue;
            }
            let removed = self.links[l].switch_bam(kind, mode);
            outcome.changed_links.push(self.topology.links[l].id.clone());
            for flow in removed {
                self.cascade(flow, Some(l));
                outcome.preempted.push(flow);
            }
        }
        self.counters.switches += outcome.changed_links.len() as u64;
        self.counters.preemptions += outcome.preempted.len() as u64;
        self.record(Operation::Switch);
        Ok(outcome)
    }

    pub fn snapshot(&self) -> NetworkView {
        NetworkView {
            links: self
                .topology
                .links
                .iter()
                .zip(&self.links)
                .map(|(spec, link)| LinkView {
                    id: spec.id.clone(),
                    active_bam: link.active_bam(),
                    capacity: link.capacity(),
                    used_per_class: link.used_per_class().to_vec(),
                    utilization: link.utilization(),
                })
                .collect(),
            paths: self.paths.iter().map(|(&f, p)| (f, p.links.clone())).collect(),
            counters: self.counters,
        }
    }

    /// Rebuilds the flow -> links map purely from the per-link allocation ledgers, in route
    /// (topology link) order.
    pub fn reconstruct_paths(&self) -> BTreeMap<FlowId, Vec<String>> {
        let mut out: BTreeMap<FlowId, Vec<String>> = BTreeMap::new();
        for (spec, link) in self.topology.links.iter().zip(&self.links) {
            for a in link.allocations() {
                out.entry(a.flow).or_default().push(spec.id.clone());
            }
        }
        out
    }

    /// Checks that paths and link ledgers agree exactly and that every link's bookkeeping is
    /// sound. Returns a description of the first discrepancy.
    pub fn check_coherence(&self) -> Result<(), String> {
        for (spec, link) in self.topology.links.iter().zip(&self.links) {
            link.check_bookkeeping().map_err(|v| format!("link {}: {v:?}", spec.id))?;
            for a in link.allocations() {
                let path = self.paths.get(&a.flow).ok_or_else(|| format!("{} on {} has no path", a.flow, spec.id))?;
                if !path.links.contains(&spec.id) || a.class != path.class || a.bandwidth != path.bandwidth {
                    return Err(format!("{} on {} disagrees with its path", a.flow, spec.id));
                }
            }
        }
        for (flow, path) in &self.paths {
            for id in &path.links {
                if !self.links[self.link_index[id]].contains(*flow) {
                    return Err(format!("{flow} missing on {id}"));
                }
            }
        }
        Ok(())
    }

    /// Constraints exceeded on any link, with the link id.
    pub fn excess(&self) -> Vec<(String, Constraint, Bandwidth)> {
        self.topology
            .links
            .iter()
            .zip(&self.links)
            .flat_map(|(spec, link)| link.excess().into_iter().map(move |(c, b)| (spec.id.clone(), c, b)))
            .collect()
    }
}
