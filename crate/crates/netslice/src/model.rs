//! Core data model: substrate network, slice requests, traffic statistics,
//! and price vectors.
//!
//! All types here are plain value objects. They are built once (usually by the
//! scenario loader), validated, and then shared read-only; residual capacities
//! are only ever updated through the transactional operations in
//! [`crate::embedding`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Functional role of a node. Virtual nodes map onto substrate nodes of a
/// compatible kind (exact match by default, see
/// [`crate::embedding::KindCompatibility`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    RadioAccess,
    ServingGateway,
    /// Service-facing packet gateway (egress to the Internet).
    PacketGateway,
    /// Administrative packet gateway (egress to management functions).
    AdminGateway,
    Generic,
}

impl NodeKind {
    pub const ALL: [NodeKind; 5] = [
        NodeKind::RadioAccess,
        NodeKind::ServingGateway,
        NodeKind::PacketGateway,
        NodeKind::AdminGateway,
        NodeKind::Generic,
    ];

    pub fn label(self) -> &'static str {
        match self {
            NodeKind::RadioAccess => "radio-access",
            NodeKind::ServingGateway => "serving-gateway",
            NodeKind::PacketGateway => "packet-gateway",
            NodeKind::AdminGateway => "admin-gateway",
            NodeKind::Generic => "generic",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A physical node with a service-rate pool, in packets/second.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstrateNode {
    pub id: String,
    pub kind: NodeKind,
    pub capacity: f64,
    pub residual: f64,
}

/// An undirected physical link. `bandwidth` may be `f64::INFINITY`, meaning
/// the link is not a constraint (the default when a scenario file omits it).
#[derive(Debug, Clone, PartialEq)]
pub struct SubstrateLink {
    pub a: String,
    pub b: String,
    pub bandwidth: f64,
    pub residual_bandwidth: f64,
}

impl SubstrateLink {
    /// Canonical unordered key for this link.
    pub fn key(&self) -> (String, String) {
        if self.a <= self.b {
            (self.a.clone(), self.b.clone())
        } else {
            (self.b.clone(), self.a.clone())
        }
    }
}

/// The physical network onto which slices are embedded.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubstrateNetwork {
    pub nodes: Vec<SubstrateNode>,
    pub links: Vec<SubstrateLink>,
}

impl SubstrateNetwork {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn node(&self, id: &str) -> Option<&SubstrateNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Adjacency map with neighbor ids in ascending order, so traversals are
    /// deterministic.
    pub fn adjacency(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for n in &self.nodes {
            adj.insert(n.id.as_str(), Vec::new());
        }
        for l in &self.links {
            if adj.contains_key(l.a.as_str()) && adj.contains_key(l.b.as_str()) {
                adj.get_mut(l.a.as_str()).unwrap().push(l.b.as_str());
                adj.get_mut(l.b.as_str()).unwrap().push(l.a.as_str());
            }
        }
        for neighbors in adj.values_mut() {
            neighbors.sort_unstable();
            neighbors.dedup();
        }
        adj
    }
}

/// A broken invariant, reported as data rather than as a failure so a loader
/// can show all problems at once.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// The node id, link `a--b` pair, or section that broke the rule.
    pub entity: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Check every substrate invariant; an empty list means the network is
/// well-formed. Each violation names the entity and the rule broken.
pub fn validate_substrate(net: &SubstrateNetwork) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for n in &net.nodes {
        if !valid_id(&n.id) {
            out.push(Violation {
                entity: n.id.clone(),
                rule: "node id must be non-empty and use [A-Za-z0-9._-]".into(),
            });
        }
        if !seen.insert(n.id.clone()) {
            out.push(Violation {
                entity: n.id.clone(),
                rule: "duplicate node id".into(),
            });
        }
        if !(n.capacity > 0.0) || !n.capacity.is_finite() {
            out.push(Violation {
                entity: n.id.clone(),
                rule: "capacity must be positive".into(),
            });
        }
        if !(0.0 <= n.residual && n.residual <= n.capacity) {
            out.push(Violation {
                entity: n.id.clone(),
                rule: "residual must lie in [0, capacity]".into(),
            });
        }
    }
    let mut seen_links = BTreeSet::new();
    for l in &net.links {
        let entity = format!("{}--{}", l.a, l.b);
        if l.a == l.b {
            out.push(Violation {
                entity: entity.clone(),
                rule: "link endpoints must be distinct".into(),
            });
        }
        for end in [&l.a, &l.b] {
            if net.node_index(end).is_none() {
                out.push(Violation {
                    entity: entity.clone(),
                    rule: format!("dangling endpoint `{end}`"),
                });
            }
        }
        if !seen_links.insert(l.key()) {
            out.push(Violation {
                entity: entity.clone(),
                rule: "duplicate link".into(),
            });
        }
        if !(l.bandwidth > 0.0) {
            out.push(Violation {
                entity: entity.clone(),
                rule: "bandwidth must be positive".into(),
            });
        }
        if !(0.0 <= l.residual_bandwidth && l.residual_bandwidth <= l.bandwidth)
            && !(l.bandwidth.is_infinite() && l.residual_bandwidth.is_infinite())
        {
            out.push(Violation {
                entity,
                rule: "residual bandwidth must lie in [0, bandwidth]".into(),
            });
        }
    }
    // Connectivity only makes sense once ids resolve.
    if out.is_empty() && net.nodes.len() > 1 {
        let adj = net.adjacency();
        let start = net.nodes[0].id.as_str();
        let mut reached = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if reached.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        for n in &net.nodes {
            if !reached.contains(n.id.as_str()) {
                out.push(Violation {
                    entity: n.id.clone(),
                    rule: "unreachable from the rest of the substrate".into(),
                });
            }
        }
    }
    out
}

/// Arrival statistics for one slice.
///
/// Rates are in packets/second throughout. `mean_packet_size_bits` makes the
/// unit conversion explicit: with 1-Mbit mean packets, packets/second and
/// Mbit/s are numerically equal.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficModel {
    /// External (fresh) arrival rate per virtual node.
    pub external_arrivals: Vec<f64>,
    /// `routing[i][j]` is the probability a packet finishing service at node
    /// `i` proceeds to node `j`; the row deficit `1 - sum` is the exit
    /// probability.
    pub routing: Vec<Vec<f64>>,
    pub mean_packet_size_bits: f64,
}

impl TrafficModel {
    pub fn node_count(&self) -> usize {
        self.external_arrivals.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        if self.routing.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "routing matrix has {} rows for {} nodes",
                self.routing.len(),
                n
            )));
        }
        if !(self.mean_packet_size_bits > 0.0) || !self.mean_packet_size_bits.is_finite() {
            return Err(Error::InvalidParameter(
                "mean packet size must be positive and finite".into(),
            ));
        }
        for (i, &g) in self.external_arrivals.iter().enumerate() {
            if !(g >= 0.0) || !g.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "external arrival rate at node {i} must be non-negative and finite"
                )));
            }
        }
        if !self.external_arrivals.iter().any(|&g| g > 0.0) {
            return Err(Error::Degenerate(
                "traffic model has no external arrivals".into(),
            ));
        }
        let mut open = false;
        for (i, row) in self.routing.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "routing row {i} has {} entries for {n} nodes",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!(
                        "routing probability [{i}][{j}] = {p} outside [0, 1]"
                    )));
                }
                sum += p;
            }
            if sum > 1.0 + 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "routing row {i} sums to {sum} > 1"
                )));
            }
            if sum < 1.0 - 1e-9 {
                open = true;
            }
        }
        if !open {
            return Err(Error::InvalidParameter(
                "routing matrix has no exit row; the network would be closed".into(),
            ));
        }
        Ok(())
    }
}

/// One node of a requested slice topology. `fixed_capacity` pins the service
/// rate up front; when absent the capacity module sizes it.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualNode {
    pub kind: NodeKind,
    pub fixed_capacity: Option<f64>,
}

/// A slice request: topology, traffic statistics, the SLA latency bound, and
/// the budget the tenant will pay at most.
#[derive(Debug, Clone, PartialEq)]
pub struct VnRequest {
    pub id: String,
    pub virtual_nodes: Vec<VirtualNode>,
    pub virtual_links: Vec<(usize, usize)>,
    pub traffic: TrafficModel,
    /// Mean end-to-end delay bound, seconds.
    pub sla_latency: f64,
    /// Maximum acceptable total leasing cost.
    pub budget: f64,
    /// Higher values are admitted first.
    pub priority: i64,
}

impl VnRequest {
    pub fn node_count(&self) -> usize {
        self.virtual_nodes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !valid_id(&self.id) {
            return Err(Error::InvalidParameter(format!(
                "vn id `{}` must be non-empty and use [A-Za-z0-9._-]",
                self.id
            )));
        }
        let n = self.node_count();
        if n == 0 {
            return Err(Error::InvalidParameter(format!(
                "vn `{}` has no virtual nodes",
                self.id
            )));
        }
        if !(self.sla_latency > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "vn `{}`: sla latency must be positive",
                self.id
            )));
        }
        if !(self.budget > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "vn `{}`: budget must be positive",
                self.id
            )));
        }
        for node in &self.virtual_nodes {
            if let Some(c) = node.fixed_capacity {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "vn `{}`: fixed capacity must be positive and finite",
                        self.id
                    )));
                }
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &self.virtual_links {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "vn `{}`: virtual link ({u}, {v}) references a missing node",
                    self.id
                )));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!(
                    "vn `{}`: virtual link endpoints must be distinct",
                    self.id
                )));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        if n > 1 {
            let mut reached = vec![false; n];
            reached[0] = true;
            let mut queue = VecDeque::from([0]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !reached[v] {
                        reached[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            if reached.iter().any(|r| !r) {
                return Err(Error::InvalidParameter(format!(
                    "vn `{}`: virtual topology is disconnected",
                    self.id
                )));
            }
        }
        if self.traffic.node_count() != n {
            return Err(Error::DimensionMismatch(format!(
                "vn `{}`: traffic model covers {} nodes for a {}-node topology",
                self.id,
                self.traffic.node_count(),
                n
            )));
        }
        self.traffic.validate()
    }
}

/// Per-virtual-node unit prices of service rate quoted by the provider.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceVector {
    pub prices: Vec<f64>,
}

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Self {
        Self { prices }
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.prices.is_empty() {
            return Err(Error::InvalidParameter("price vector is empty".into()));
        }
        for (i, &p) in self.prices.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "price {i} must be positive and finite, got {p}"
                )));
            }
        }
        Ok(())
    }

    /// First `n` prices, for slices smaller than the quoted vector.
    pub fn prefix(&self, n: usize) -> Result<PriceVector> {
        if self.prices.len() < n {
            return Err(Error::DimensionMismatch(format!(
                "price vector has {} entries, {} needed",
                self.prices.len(),
                n
            )));
        }
        Ok(PriceVector::new(self.prices[..n].to_vec()))
    }
}

/// Mean packet size used by the reference gateway-chain scenarios: 1 Mbit, so
/// packets/second and Mbit/s coincide numerically.
pub const CASE_STUDY_PACKET_BITS: f64 = 1.0e6;

/// The four-node reference slice: radio access -> serving gateway, which then
/// forwards a `q` fraction to the administrative gateway and the rest to the
/// service packet gateway. External traffic `lambda` enters at the radio
/// access node only.
///
/// SLA latency defaults to 10 ms, budget to unbounded, priority to 0; adjust
/// the returned request's fields for other settings.
pub fn case_study_topology(lambda: f64, q: f64) -> Result<VnRequest> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "q must lie in [0, 1], got {q}"
        )));
    }
    let kinds = [
        NodeKind::RadioAccess,
        NodeKind::ServingGateway,
        NodeKind::AdminGateway,
        NodeKind::PacketGateway,
    ];
    let mut routing = vec![vec![0.0; 4]; 4];
    routing[0][1] = 1.0;
    routing[1][2] = q;
    routing[1][3] = 1.0 - q;
    let request = VnRequest {
        id: "case-study".into(),
        virtual_nodes: kinds
            .iter()
            .map(|&kind| VirtualNode {
                kind,
                fixed_capacity: None,
            })
            .collect(),
        virtual_links: vec![(0, 1), (1, 2), (1, 3)],
        traffic: TrafficModel {
            external_arrivals: vec![lambda, 0.0, 0.0, 0.0],
            routing,
            mean_packet_size_bits: CASE_STUDY_PACKET_BITS,
        },
        sla_latency: 0.010,
        budget: f64::INFINITY,
        priority: 0,
    };
    debug_assert!(request.validate().is_ok());
    Ok(request)
}
