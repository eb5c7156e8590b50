//! Mapping slices onto the substrate: virtual nodes to physical nodes of a
//! compatible kind (one-to-one within a slice), virtual links to physical
//! paths, with capacity bookkeeping, admission control, and release.
//!
//! All mutations are transactional: a rejected operation leaves the
//! [`AllocationState`] structurally untouched. Residuals are always
//! recomputed from scratch over the active set (in ascending `vn_id` order),
//! so admit/release round-trips restore the state bit for bit.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::capacity::CapacityPlan;
use crate::error::{Error, Result};
use crate::model::{validate_substrate, NodeKind, SubstrateNetwork, VnRequest};
use crate::queueing::solve_traffic_equations;

/// Which substrate kinds may host each virtual kind. The default is an exact
/// kind match; scenario files may widen it (for example, letting `generic`
/// virtual nodes land anywhere).
#[derive(Debug, Clone, PartialEq)]
pub struct KindCompatibility {
    allowed: BTreeMap<NodeKind, BTreeSet<NodeKind>>,
}

impl Default for KindCompatibility {
    fn default() -> Self {
        Self::exact()
    }
}

impl KindCompatibility {
    /// Each virtual kind maps only onto the same substrate kind.
    pub fn exact() -> Self {
        let mut allowed = BTreeMap::new();
        for kind in NodeKind::ALL {
            allowed.insert(kind, BTreeSet::from([kind]));
        }
        Self { allowed }
    }

    /// Replace the substrate kinds a virtual kind may use.
    pub fn set(
        &mut self,
        virtual_kind: NodeKind,
        substrate_kinds: impl IntoIterator<Item = NodeKind>,
    ) {
        self.allowed
            .insert(virtual_kind, substrate_kinds.into_iter().collect());
    }

    pub fn allows(&self, virtual_kind: NodeKind, substrate_kind: NodeKind) -> bool {
        self.allowed
            .get(&virtual_kind)
            .is_some_and(|s| s.contains(&substrate_kind))
    }
}

/// A committed mapping of one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub vn_id: String,
    /// Substrate node id per virtual node.
    pub node_map: Vec<String>,
    /// Substrate path (node id sequence, endpoints included) per virtual link.
    pub link_map: Vec<Vec<String>>,
    /// Service rate reserved per virtual node.
    pub node_alloc: Vec<f64>,
    /// Bandwidth reserved per virtual link, along its whole path.
    pub link_alloc: Vec<f64>,
}

/// Substrate with live residuals plus the set of embeddings they account for.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationState {
    pub substrate: SubstrateNetwork,
    pub active: BTreeMap<String, Embedding>,
}

/// Why a slice could not be placed. Rejections are outcomes, not errors.
#[derive(Debug, Clone, PartialEq)]
pub enum RejectReason {
    NoCompatibleNode {
        virtual_index: usize,
        kind: NodeKind,
    },
    NodeCapacity {
        virtual_index: usize,
        needed: f64,
        available: f64,
    },
    LinkBandwidth {
        virtual_link: (usize, usize),
        needed: f64,
    },
    NoPath {
        virtual_link: (usize, usize),
    },
}

impl RejectReason {
    pub fn label(&self) -> &'static str {
        match self {
            RejectReason::NoCompatibleNode { .. } => "no compatible node",
            RejectReason::NodeCapacity { .. } => "node capacity",
            RejectReason::LinkBandwidth { .. } => "link bandwidth",
            RejectReason::NoPath { .. } => "no path",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbedOutcome {
    Embedded(Embedding),
    Rejected(RejectReason),
}

impl EmbedOutcome {
    pub fn is_embedded(&self) -> bool {
        matches!(self, EmbedOutcome::Embedded(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedMode {
    /// Exhaustive search over admitted subsets and node assignments,
    /// maximizing the number of admitted slices. Limited to small instances.
    Exact,
    /// Descending-priority first fit: largest-residual compatible node,
    /// shortest feasible path.
    Greedy,
}

/// Result of a batch embedding run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedMaxOutcome {
    pub state: AllocationState,
    /// Admitted vn ids, ascending.
    pub admitted: Vec<String>,
    /// (vn id, reason label) for slices that were not admitted.
    pub rejected: Vec<(String, String)>,
}

/// Exact-mode size limits; larger instances must use greedy.
pub const EXACT_MAX_REQUESTS: usize = 4;
pub const EXACT_MAX_SUBSTRATE_NODES: usize = 10;

impl AllocationState {
    /// Start from an empty allocation over a validated substrate.
    pub fn new(substrate: SubstrateNetwork) -> Result<Self> {
        let violations = validate_substrate(&substrate);
        if !violations.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "substrate is not well-formed: {}",
                violations[0]
            )));
        }
        let mut state = Self {
            substrate,
            active: BTreeMap::new(),
        };
        state.recompute_residuals();
        Ok(state)
    }

    /// Residuals are a pure function of the active set: start from full
    /// capacity and subtract every allocation in ascending `vn_id` order.
    fn recompute_residuals(&mut self) {
        for node in &mut self.substrate.nodes {
            node.residual = node.capacity;
        }
        for link in &mut self.substrate.links {
            link.residual_bandwidth = link.bandwidth;
        }
        let mut link_index: BTreeMap<(String, String), usize> = BTreeMap::new();
        for (i, link) in self.substrate.links.iter().enumerate() {
            link_index.insert(link.key(), i);
        }
        let node_index: BTreeMap<String, usize> = self
            .substrate
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        for emb in self.active.values() {
            for (sub_id, &alloc) in emb.node_map.iter().zip(&emb.node_alloc) {
                let i = node_index[sub_id];
                self.substrate.nodes[i].residual -= alloc;
            }
            for (path, &alloc) in emb.link_map.iter().zip(&emb.link_alloc) {
                if alloc == 0.0 {
                    continue;
                }
                for hop in path.windows(2) {
                    let key = if hop[0] <= hop[1] {
                        (hop[0].clone(), hop[1].clone())
                    } else {
                        (hop[1].clone(), hop[0].clone())
                    };
                    let i = link_index[&key];
                    self.substrate.links[i].residual_bandwidth -= alloc;
                }
            }
        }
    }

    /// Total residual over finite pools, used as a deterministic tie-break
    /// metric in reports.
    pub fn total_finite_residual(&self) -> f64 {
        let nodes: f64 = self.substrate.nodes.iter().map(|n| n.residual).sum();
        let links: f64 = self
            .substrate
            .links
            .iter()
            .filter(|l| l.bandwidth.is_finite())
            .map(|l| l.residual_bandwidth)
            .sum();
        nodes + links
    }
}

/// Bandwidth each virtual link must carry: the traffic crossing it in either
/// direction under the slice's routing.
fn link_demands(request: &VnRequest) -> Result<Vec<f64>> {
    let flow = solve_traffic_equations(&request.traffic)?;
    Ok(request
        .virtual_links
        .iter()
        .map(|&(u, v)| {
            flow.lambdas[u] * request.traffic.routing[u][v]
                + flow.lambdas[v] * request.traffic.routing[v][u]
        })
        .collect())
}

/// Shortest path by hop count from `src` to `dst` over links whose working
/// residual covers `demand`. Neighbors are explored in ascending id order, so
/// the result is deterministic. Returns node indices.
fn shortest_feasible_path(
    net: &SubstrateNetwork,
    link_res: &[f64],
    src: usize,
    dst: usize,
    demand: f64,
) -> Option<Vec<usize>> {
    let n = net.nodes.len();
    // adjacency as (neighbor index, link index), sorted by neighbor id
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (li, link) in net.links.iter().enumerate() {
        let a = net.node_index(&link.a).expect("validated substrate");
        let b = net.node_index(&link.b).expect("validated substrate");
        adj[a].push((b, li));
        adj[b].push((a, li));
    }
    for list in &mut adj {
        list.sort_by(|x, y| net.nodes[x.0].id.cmp(&net.nodes[y.0].id));
    }
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[src] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        if u == dst {
            let mut path = vec![dst];
            let mut cur = dst;
            while let Some(p) = parent[cur] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for &(v, li) in &adj[u] {
            if !seen[v] && link_res[li] >= demand {
                seen[v] = true;
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    None
}

/// Working context for building one slice mapping against residual copies.
struct Placement<'a> {
    net: &'a SubstrateNetwork,
    compat: &'a KindCompatibility,
    node_res: Vec<f64>,
    link_res: Vec<f64>,
    used: Vec<bool>,
}

impl<'a> Placement<'a> {
    fn from_state(state: &'a AllocationState, compat: &'a KindCompatibility) -> Self {
        Self {
            net: &state.substrate,
            compat,
            node_res: state.substrate.nodes.iter().map(|n| n.residual).collect(),
            link_res: state
                .substrate
                .links
                .iter()
                .map(|l| l.residual_bandwidth)
                .collect(),
            used: vec![false; state.substrate.nodes.len()],
        }
    }

    /// Greedy choice for one virtual node: kind-compatible, unused, fits, and
    /// of those the largest working residual (ties to the smaller id).
    fn place_node(
        &mut self,
        virtual_index: usize,
        kind: NodeKind,
        demand: f64,
    ) -> std::result::Result<usize, RejectReason> {
        let mut best: Option<usize> = None;
        let mut any_compatible = false;
        let mut best_available = 0.0f64;
        for (j, node) in self.net.nodes.iter().enumerate() {
            if self.used[j] || !self.compat.allows(kind, node.kind) {
                continue;
            }
            any_compatible = true;
            best_available = best_available.max(self.node_res[j]);
            if self.node_res[j] >= demand {
                best = match best {
                    None => Some(j),
                    Some(b) => {
                        let better = self.node_res[j] > self.node_res[b]
                            || (self.node_res[j] == self.node_res[b]
                                && self.net.nodes[j].id < self.net.nodes[b].id);
                        Some(if better { j } else { b })
                    }
                };
            }
        }
        match best {
            Some(j) => {
                self.node_res[j] -= demand;
                self.used[j] = true;
                Ok(j)
            }
            None if any_compatible => Err(RejectReason::NodeCapacity {
                virtual_index,
                needed: demand,
                available: best_available,
            }),
            None => Err(RejectReason::NoCompatibleNode {
                virtual_index,
                kind,
            }),
        }
    }

    /// Route one virtual link between two placed nodes and reserve bandwidth.
    fn place_link(
        &mut self,
        vlink: (usize, usize),
        src: usize,
        dst: usize,
        demand: f64,
    ) -> std::result::Result<Vec<usize>, RejectReason> {
        match shortest_feasible_path(self.net, &self.link_res, src, dst, demand) {
            Some(path) => {
                for hop in path.windows(2) {
                    let li = self.link_index(hop[0], hop[1]);
                    self.link_res[li] -= demand;
                }
                Ok(path)
            }
            None => {
                // Distinguish congestion from a genuinely disconnected pair.
                let unconstrained = vec![f64::INFINITY; self.link_res.len()];
                if shortest_feasible_path(self.net, &unconstrained, src, dst, 0.0).is_some() {
                    Err(RejectReason::LinkBandwidth {
                        virtual_link: vlink,
                        needed: demand,
                    })
                } else {
                    Err(RejectReason::NoPath {
                        virtual_link: vlink,
                    })
                }
            }
        }
    }

    fn link_index(&self, a: usize, b: usize) -> usize {
        let (ia, ib) = (&self.net.nodes[a].id, &self.net.nodes[b].id);
        self.net
            .links
            .iter()
            .position(|l| (&l.a == ia && &l.b == ib) || (&l.a == ib && &l.b == ia))
            .expect("path hops follow existing links")
    }
}

fn check_plan_dims(request: &VnRequest, plan: &CapacityPlan) -> Result<()> {
    if plan.mus.len() != request.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "plan sizes {} nodes, request has {}",
            plan.mus.len(),
            request.node_count()
        )));
    }
    Ok(())
}

/// Try to place one slice. On success the state is updated transactionally;
/// on rejection it is untouched.
pub fn embed_one(
    state: &mut AllocationState,
    request: &VnRequest,
    plan: &CapacityPlan,
    compat: &KindCompatibility,
) -> Result<EmbedOutcome> {
    check_plan_dims(request, plan)?;
    request.validate()?;
    if state.active.contains_key(&request.id) {
        return Err(Error::InvalidParameter(format!(
            "vn `{}` is already embedded",
            request.id
        )));
    }
    let demands = link_demands(request)?;
    let mut placement = Placement::from_state(state, compat);

    let mut node_map_idx = Vec::with_capacity(request.node_count());
    for (i, vnode) in request.virtual_nodes.iter().enumerate() {
        match placement.place_node(i, vnode.kind, plan.mus[i]) {
            Ok(j) => node_map_idx.push(j),
            Err(reason) => return Ok(EmbedOutcome::Rejected(reason)),
        }
    }
    let mut link_map_idx = Vec::with_capacity(request.virtual_links.len());
    for (k, &(u, v)) in request.virtual_links.iter().enumerate() {
        match placement.place_link((u, v), node_map_idx[u], node_map_idx[v], demands[k]) {
            Ok(path) => link_map_idx.push(path),
            Err(reason) => return Ok(EmbedOutcome::Rejected(reason)),
        }
    }

    let embedding = Embedding {
        vn_id: request.id.clone(),
        node_map: node_map_idx
            .iter()
            .map(|&j| state.substrate.nodes[j].id.clone())
            .collect(),
        link_map: link_map_idx
            .iter()
            .map(|path| {
                path.iter()
                    .map(|&j| state.substrate.nodes[j].id.clone())
                    .collect()
            })
            .collect(),
        node_alloc: plan.mus.clone(),
        link_alloc: demands,
    };
    state.active.insert(request.id.clone(), embedding.clone());
    state.recompute_residuals();
    debug_assert!(state.substrate.nodes.iter().all(|n| n.residual >= -1e-9));
    Ok(EmbedOutcome::Embedded(embedding))
}

/// Admission control for a live system: admit the new slice only if it fits
/// in the residuals as they stand. Existing embeddings are never modified —
/// placement only ever subtracts from residual pools, so accepted slices keep
/// their allocations untouched by construction.
pub fn admit_dynamic(
    state: &mut AllocationState,
    request: &VnRequest,
    plan: &CapacityPlan,
    compat: &KindCompatibility,
) -> Result<EmbedOutcome> {
    embed_one(state, request, plan, compat)
}

/// Tear down a slice and return residuals to the pool. The state after
/// `admit` then `release` is bit-identical to the state before, because
/// residuals are recomputed from the active set rather than patched.
pub fn release(state: &mut AllocationState, vn_id: &str) -> Result<Embedding> {
    let removed = state
        .active
        .remove(vn_id)
        .ok_or_else(|| Error::UnknownVn(vn_id.to_string()))?;
    state.recompute_residuals();
    Ok(removed)
}

/// Swap a slice's allocations for newly sized ones, keeping its node mapping
/// and paths. Admits the change only if every residual stays non-negative;
/// otherwise rejects and leaves the state (and the slice) unchanged.
/// Shrinking always succeeds and releases the difference immediately.
pub fn reallocate(
    state: &mut AllocationState,
    vn_id: &str,
    request: &VnRequest,
    new_plan: &CapacityPlan,
) -> Result<EmbedOutcome> {
    check_plan_dims(request, new_plan)?;
    if !state.active.contains_key(vn_id) {
        return Err(Error::UnknownVn(vn_id.to_string()));
    }
    let new_demands = link_demands(request)?;
    let mut trial = state.clone();
    {
        let emb = trial.active.get_mut(vn_id).expect("checked above");
        if emb.node_map.len() != new_plan.mus.len() || emb.link_map.len() != new_demands.len() {
            return Err(Error::DimensionMismatch(format!(
                "vn `{vn_id}`: new plan does not match the embedded topology"
            )));
        }
        emb.node_alloc = new_plan.mus.clone();
        emb.link_alloc = new_demands;
    }
    trial.recompute_residuals();
    if let Some(node) = trial.substrate.nodes.iter().find(|n| n.residual < 0.0) {
        let vi = trial.active[vn_id]
            .node_map
            .iter()
            .position(|id| *id == node.id)
            .unwrap_or(0);
        return Ok(EmbedOutcome::Rejected(RejectReason::NodeCapacity {
            virtual_index: vi,
            needed: new_plan.mus.get(vi).copied().unwrap_or(0.0),
            available: state
                .substrate
                .node(&node.id)
                .map(|n| n.residual)
                .unwrap_or(0.0),
        }));
    }
    if trial
        .substrate
        .links
        .iter()
        .any(|l| l.residual_bandwidth < 0.0)
    {
        return Ok(EmbedOutcome::Rejected(RejectReason::LinkBandwidth {
            virtual_link: (0, 0),
            needed: 0.0,
        }));
    }
    *state = trial;
    let updated = state.active[vn_id].clone();
    Ok(EmbedOutcome::Embedded(updated))
}

/// Admit as many of `requests` as possible onto a fresh copy of `substrate`.
///
/// Greedy mode processes slices in descending priority (ties by ascending vn
/// id) and keeps whatever fits. Exact mode exhaustively searches admitted
/// subsets and node assignments (coordinated with path feasibility) and
/// returns a maximum-cardinality admitted set; among equal-cardinality sets
/// it prefers higher priorities, then the lexicographically smaller vn id
/// list, and keeps the first feasible assignment found by a
/// largest-residual-first search.
pub fn embed_max(
    substrate: &SubstrateNetwork,
    requests: &[(VnRequest, CapacityPlan)],
    mode: EmbedMode,
    compat: &KindCompatibility,
) -> Result<EmbedMaxOutcome> {
    for (request, plan) in requests {
        check_plan_dims(request, plan)?;
        request.validate()?;
    }
    let mut ids = BTreeSet::new();
    for (request, _) in requests {
        if !ids.insert(request.id.clone()) {
            return Err(Error::InvalidParameter(format!(
                "duplicate vn id `{}` in batch",
                request.id
            )));
        }
    }
    match mode {
        EmbedMode::Greedy => embed_max_greedy(substrate, requests, compat),
        EmbedMode::Exact => embed_max_exact(substrate, requests, compat),
    }
}

fn processing_order(requests: &[(VnRequest, CapacityPlan)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| {
        requests[b]
            .0
            .priority
            .cmp(&requests[a].0.priority)
            .then_with(|| requests[a].0.id.cmp(&requests[b].0.id))
    });
    order
}

fn embed_max_greedy(
    substrate: &SubstrateNetwork,
    requests: &[(VnRequest, CapacityPlan)],
    compat: &KindCompatibility,
) -> Result<EmbedMaxOutcome> {
    let mut state = AllocationState::new(substrate.clone())?;
    let mut admitted = Vec::new();
    let mut rejected = Vec::new();
    for idx in processing_order(requests) {
        let (request, plan) = &requests[idx];
        match embed_one(&mut state, request, plan, compat)? {
            EmbedOutcome::Embedded(_) => admitted.push(request.id.clone()),
            EmbedOutcome::Rejected(reason) => {
                rejected.push((request.id.clone(), reason.label().to_string()))
            }
        }
    }
    admitted.sort();
    rejected.sort();
    Ok(EmbedMaxOutcome {
        state,
        admitted,
        rejected,
    })
}

/// Exhaustive joint search: does some assignment embed every request in
/// `order`? Works on residual copies; snapshots make backtracking exact.
struct ExactSearch<'a> {
    net: &'a SubstrateNetwork,
    compat: &'a KindCompatibility,
    requests: Vec<&'a (VnRequest, CapacityPlan)>,
    demands: Vec<Vec<f64>>,
    node_res: Vec<f64>,
    link_res: Vec<f64>,
    maps: Vec<Vec<usize>>,
    paths: Vec<Vec<Vec<usize>>>,
}

type NodeAssignments = Vec<Vec<usize>>;
type PathAssignments = Vec<Vec<Vec<usize>>>;

impl<'a> ExactSearch<'a> {
    fn run(mut self) -> Option<(NodeAssignments, PathAssignments)> {
        if self.place(0, 0) {
            Some((self.maps, self.paths))
        } else {
            None
        }
    }

    fn place(&mut self, req: usize, vnode: usize) -> bool {
        if req == self.requests.len() {
            return true;
        }
        let (request, plan) = self.requests[req];
        if vnode == request.node_count() {
            return self.place(req + 1, 0);
        }
        let kind = request.virtual_nodes[vnode].kind;
        let demand = plan.mus[vnode];
        // candidates sorted by residual desc, id asc
        let mut candidates: Vec<usize> = (0..self.net.nodes.len())
            .filter(|&j| {
                !self.maps[req].contains(&j)
                    && self.compat.allows(kind, self.net.nodes[j].kind)
                    && self.node_res[j] >= demand
            })
            .collect();
        candidates.sort_by(|&x, &y| {
            self.node_res[y]
                .total_cmp(&self.node_res[x])
                .then_with(|| self.net.nodes[x].id.cmp(&self.net.nodes[y].id))
        });
        for j in candidates {
            let snapshot = (self.node_res.clone(), self.link_res.clone());
            self.node_res[j] -= demand;
            self.maps[req].push(j);
            // route every virtual link that just became fully mapped
            let mut routed = true;
            let mut routed_paths = Vec::new();
            for &(u, v) in request
                .virtual_links
                .iter()
                .filter(|&&(u, v)| u.max(v) == vnode)
            {
                let k = request
                    .virtual_links
                    .iter()
                    .position(|&l| l == (u, v))
                    .unwrap();
                match shortest_feasible_path(
                    self.net,
                    &self.link_res,
                    self.maps[req][u],
                    self.maps[req][v],
                    self.demands[req][k],
                ) {
                    Some(path) => {
                        for hop in path.windows(2) {
                            let li = self.link_between(hop[0], hop[1]);
                            self.link_res[li] -= self.demands[req][k];
                        }
                        routed_paths.push((k, path));
                    }
                    None => {
                        routed = false;
                        break;
                    }
                }
            }
            if routed {
                for (k, path) in &routed_paths {
                    while self.paths[req].len() <= *k {
                        self.paths[req].push(Vec::new());
                    }
                    self.paths[req][*k] = path.clone();
                }
                if self.place(req, vnode + 1) {
                    return true;
                }
                for (k, _) in &routed_paths {
                    self.paths[req][*k] = Vec::new();
                }
            }
            self.maps[req].pop();
            self.node_res = snapshot.0;
            self.link_res = snapshot.1;
        }
        false
    }

    fn link_between(&self, a: usize, b: usize) -> usize {
        let (ia, ib) = (&self.net.nodes[a].id, &self.net.nodes[b].id);
        self.net
            .links
            .iter()
            .position(|l| (&l.a == ia && &l.b == ib) || (&l.a == ib && &l.b == ia))
            .expect("path hops follow existing links")
    }
}

fn embed_max_exact(
    substrate: &SubstrateNetwork,
    requests: &[(VnRequest, CapacityPlan)],
    compat: &KindCompatibility,
) -> Result<EmbedMaxOutcome> {
    if requests.len() > EXACT_MAX_REQUESTS {
        return Err(Error::TooLarge(format!(
            "exact mode handles at most {EXACT_MAX_REQUESTS} requests, got {}",
            requests.len()
        )));
    }
    if substrate.nodes.len() > EXACT_MAX_SUBSTRATE_NODES {
        return Err(Error::TooLarge(format!(
            "exact mode handles at most {EXACT_MAX_SUBSTRATE_NODES} substrate nodes, got {}",
            substrate.nodes.len()
        )));
    }
    let base = AllocationState::new(substrate.clone())?;
    let n = requests.len();
    let demands: Vec<Vec<f64>> = requests
        .iter()
        .map(|(r, _)| link_demands(r))
        .collect::<Result<_>>()?;

    // All candidate subsets, best first: larger, then higher priorities, then
    // the lexicographically smaller sorted vn id list.
    let mut subsets: Vec<Vec<usize>> = (0u32..1 << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    let sort_key = |subset: &Vec<usize>| {
        let mut priorities: Vec<i64> = subset.iter().map(|&i| requests[i].0.priority).collect();
        priorities.sort_unstable_by(|a, b| b.cmp(a));
        let mut ids: Vec<&str> = subset.iter().map(|&i| requests[i].0.id.as_str()).collect();
        ids.sort_unstable();
        (subset.len(), priorities, ids)
    };
    subsets.sort_by(|a, b| {
        let (len_a, pri_a, ids_a) = sort_key(a);
        let (len_b, pri_b, ids_b) = sort_key(b);
        len_b
            .cmp(&len_a)
            .then_with(|| pri_b.cmp(&pri_a))
            .then_with(|| ids_a.cmp(&ids_b))
    });

    for subset in subsets {
        let mut order = subset.clone();
        order.sort_by(|&a, &b| {
            requests[b]
                .0
                .priority
                .cmp(&requests[a].0.priority)
                .then_with(|| requests[a].0.id.cmp(&requests[b].0.id))
        });
        let search = ExactSearch {
            net: &base.substrate,
            compat,
            requests: order.iter().map(|&i| &requests[i]).collect(),
            demands: order.iter().map(|&i| demands[i].clone()).collect(),
            node_res: base.substrate.nodes.iter().map(|n| n.residual).collect(),
            link_res: base
                .substrate
                .links
                .iter()
                .map(|l| l.residual_bandwidth)
                .collect(),
            maps: vec![Vec::new(); order.len()],
            paths: vec![Vec::new(); order.len()],
        };
        if let Some((maps, paths)) = search.run() {
            let mut state = base.clone();
            for (slot, &ri) in order.iter().enumerate() {
                let (request, plan) = &requests[ri];
                let mut link_map = vec![Vec::new(); request.virtual_links.len()];
                for (k, path) in paths[slot].iter().enumerate() {
                    link_map[k] = path
                        .iter()
                        .map(|&j| state.substrate.nodes[j].id.clone())
                        .collect();
                }
                let embedding = Embedding {
                    vn_id: request.id.clone(),
                    node_map: maps[slot]
                        .iter()
                        .map(|&j| state.substrate.nodes[j].id.clone())
                        .collect(),
                    link_map,
                    node_alloc: plan.mus.clone(),
                    link_alloc: demands[ri].clone(),
                };
                state.active.insert(request.id.clone(), embedding);
            }
            state.recompute_residuals();
            let admitted: Vec<String> = {
                let mut ids: Vec<String> =
                    subset.iter().map(|&i| requests[i].0.id.clone()).collect();
                ids.sort();
                ids
            };
            let rejected: Vec<(String, String)> = (0..n)
                .filter(|i| !subset.contains(i))
                .map(|i| (requests[i].0.id.clone(), "not admitted".to_string()))
                .collect();
            return Ok(EmbedMaxOutcome {
                state,
                admitted,
                rejected,
            });
        }
    }
    unreachable!("the empty subset is always feasible")
}
