//! The on-disk scenario format.
//!
//! One TOML document describes a whole experiment: the substrate, the slice
//! requests, the quoted prices, an optional price grid for the revenue game,
//! optional kind-compatibility overrides, and an optional schedule for the
//! two-time-scale simulator. Unknown keys are rejected everywhere.
//!
//! ```toml
//! name = "two-slices"
//! seed = 42
//! prices = [0.8, 0.2, 0.05, 0.1]
//!
//! [substrate]
//! nodes = [
//!     { id = "ran0", kind = "radio-access", capacity = 5000.0 },
//!     { id = "sgw0", kind = "serving-gateway", capacity = 6000.0 },
//! ]
//! links = [
//!     { a = "ran0", b = "sgw0" },                  # omitted bandwidth = unconstrained
//! ]
//!
//! [[vns]]
//! id = "video-upload"
//! sla_latency = 0.010
//! budget = 5000.0
//! priority = 10                                    # optional, default 0
//! start = 0.0                                      # optional arrival time, default 0
//! nodes = [{ kind = "radio-access" }, { kind = "serving-gateway" }]
//! links = [[0, 1]]
//!
//! [vns.traffic]
//! external_arrivals = [2000.0, 0.0]
//! routing = [[0.0, 1.0], [0.0, 0.0]]
//! mean_packet_size_bits = 1e6
//!
//! [schedule]                                       # optional
//! epoch_length = 10.0
//! epochs = 6
//!
//! [[schedule.events]]
//! time = 20.0
//! op = "depart"
//! vn = "video-upload"
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::KindCompatibility;
use crate::model::{
    validate_substrate, NodeKind, PriceVector, SubstrateLink, SubstrateNetwork, SubstrateNode,
    TrafficModel, VirtualNode, VnRequest,
};
use crate::simulator::{ScheduledEvent, ScheduledOp};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

/// Node roles as they appear in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindName {
    RadioAccess,
    ServingGateway,
    PacketGateway,
    AdminGateway,
    Generic,
}

impl From<KindName> for NodeKind {
    fn from(value: KindName) -> Self {
        match value {
            KindName::RadioAccess => NodeKind::RadioAccess,
            KindName::ServingGateway => NodeKind::ServingGateway,
            KindName::PacketGateway => NodeKind::PacketGateway,
            KindName::AdminGateway => NodeKind::AdminGateway,
            KindName::Generic => NodeKind::Generic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Unit price of service rate per virtual node index. Slices with fewer
    /// nodes use the prefix.
    pub prices: Vec<f64>,
    pub substrate: SubstrateSection,
    pub vns: Vec<VnSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_grid: Option<PriceGridSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compatibility: Vec<CompatRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstrateSection {
    pub nodes: Vec<NodeEntry>,
    #[serde(default)]
    pub links: Vec<LinkEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: String,
    pub kind: KindName,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub a: String,
    pub b: String,
    /// Omitted means the link is not a constraint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VnSection {
    pub id: String,
    pub sla_latency: f64,
    pub budget: f64,
    #[serde(default)]
    pub priority: i64,
    /// Arrival time in seconds; zero means present from the start.
    #[serde(default)]
    pub start: f64,
    pub nodes: Vec<VnNodeEntry>,
    #[serde(default)]
    pub links: Vec<[usize; 2]>,
    pub traffic: TrafficSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VnNodeEntry {
    pub kind: KindName,
    /// Pins the service rate instead of letting the sizing module choose it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    pub external_arrivals: Vec<f64>,
    pub routing: Vec<Vec<f64>>,
    pub mean_packet_size_bits: f64,
}

impl From<TrafficSection> for TrafficModel {
    fn from(value: TrafficSection) -> Self {
        TrafficModel {
            external_arrivals: value.external_arrivals,
            routing: value.routing,
            mean_packet_size_bits: value.mean_packet_size_bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceGridSection {
    /// Full price vectors the revenue game may quote.
    pub portfolios: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompatRule {
    pub virtual_kind: KindName,
    pub substrate_kinds: Vec<KindName>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub epoch_length: f64,
    pub epochs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
    #[serde(default)]
    pub events: Vec<EventEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventOp {
    Depart,
    TrafficChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventEntry {
    pub time: f64,
    pub op: EventOp,
    pub vn: String,
    /// Required for traffic changes, forbidden otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic: Option<TrafficSection>,
}

/// A slice request plus the time it asks to join.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedRequest {
    pub start: f64,
    pub request: VnRequest,
}

/// Schedule data converted to simulator terms, arrivals merged in.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSpec {
    pub epoch_length: f64,
    pub epochs: usize,
    pub batches: Option<usize>,
    pub events: Vec<ScheduledEvent>,
}

/// A scenario converted and cross-validated into model types.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub name: String,
    pub seed: u64,
    pub substrate: SubstrateNetwork,
    pub requests: Vec<TimedRequest>,
    pub prices: PriceVector,
    /// The revenue game's grid; defaults to the quoted prices alone.
    pub portfolios: Vec<PriceVector>,
    pub compat: KindCompatibility,
    pub schedule: Option<ScheduleSpec>,
}

impl LoadedScenario {
    /// Slices present from the start.
    pub fn initial_requests(&self) -> Vec<VnRequest> {
        self.requests
            .iter()
            .filter(|t| t.start == 0.0)
            .map(|t| t.request.clone())
            .collect()
    }

    pub fn all_requests(&self) -> Vec<VnRequest> {
        self.requests.iter().map(|t| t.request.clone()).collect()
    }

    pub fn request(&self, vn_id: &str) -> Option<&VnRequest> {
        self.requests
            .iter()
            .map(|t| &t.request)
            .find(|r| r.id == vn_id)
    }
}

impl std::str::FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(text: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(text)?)
    }
}

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Convert to model types, checking every cross-reference. Fails on the
    /// first broken rule.
    pub fn to_model(&self) -> Result<LoadedScenario, ScenarioError> {
        let substrate = SubstrateNetwork {
            nodes: self
                .substrate
                .nodes
                .iter()
                .map(|n| SubstrateNode {
                    id: n.id.clone(),
                    kind: n.kind.into(),
                    capacity: n.capacity,
                    residual: n.capacity,
                })
                .collect(),
            links: self
                .substrate
                .links
                .iter()
                .map(|l| {
                    let bandwidth = l.bandwidth.unwrap_or(f64::INFINITY);
                    SubstrateLink {
                        a: l.a.clone(),
                        b: l.b.clone(),
                        bandwidth,
                        residual_bandwidth: bandwidth,
                    }
                })
                .collect(),
        };
        let violations = validate_substrate(&substrate);
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(invalid(format!("substrate: {}", list.join("; "))));
        }

        let mut requests = Vec::new();
        let mut seen = BTreeSet::new();
        for vn in &self.vns {
            if !seen.insert(vn.id.clone()) {
                return Err(invalid(format!("duplicate vn id `{}`", vn.id)));
            }
            if !(vn.start >= 0.0) || !vn.start.is_finite() {
                return Err(invalid(format!(
                    "vn `{}`: start time must be non-negative and finite",
                    vn.id
                )));
            }
            let request = VnRequest {
                id: vn.id.clone(),
                virtual_nodes: vn
                    .nodes
                    .iter()
                    .map(|n| VirtualNode {
                        kind: n.kind.into(),
                        fixed_capacity: n.capacity,
                    })
                    .collect(),
                virtual_links: vn.links.iter().map(|&[u, v]| (u, v)).collect(),
                traffic: vn.traffic.clone().into(),
                sla_latency: vn.sla_latency,
                budget: vn.budget,
                priority: vn.priority,
            };
            request
                .validate()
                .map_err(|e| invalid(format!("vn `{}`: {e}", vn.id)))?;
            requests.push(TimedRequest {
                start: vn.start,
                request,
            });
        }

        let prices = PriceVector::new(self.prices.clone());
        prices.validate().map_err(|e| invalid(e.to_string()))?;
        let widest = requests
            .iter()
            .map(|t| t.request.node_count())
            .max()
            .unwrap_or(0);
        if prices.len() < widest {
            return Err(invalid(format!(
                "prices quote {} nodes but the widest slice has {widest}",
                prices.len()
            )));
        }

        let portfolios: Vec<PriceVector> = match &self.price_grid {
            Some(grid) if !grid.portfolios.is_empty() => grid
                .portfolios
                .iter()
                .map(|p| PriceVector::new(p.clone()))
                .collect(),
            Some(_) => return Err(invalid("price grid has no portfolios")),
            None => vec![prices.clone()],
        };
        for p in &portfolios {
            p.validate().map_err(|e| invalid(e.to_string()))?;
            if p.len() < widest {
                return Err(invalid(format!(
                    "portfolio quotes {} nodes but the widest slice has {widest}",
                    p.len()
                )));
            }
        }

        let mut compat = KindCompatibility::exact();
        let mut ruled = BTreeSet::new();
        for rule in &self.compatibility {
            if !ruled.insert(rule.virtual_kind) {
                return Err(invalid(format!(
                    "duplicate compatibility rule for `{}`",
                    NodeKind::from(rule.virtual_kind)
                )));
            }
            if rule.substrate_kinds.is_empty() {
                return Err(invalid("compatibility rule allows no substrate kinds"));
            }
            compat.set(
                rule.virtual_kind.into(),
                rule.substrate_kinds.iter().map(|&k| NodeKind::from(k)),
            );
        }

        let schedule = match &self.schedule {
            None => None,
            Some(section) => {
                let mut prev = 0.0f64;
                let mut events: Vec<ScheduledEvent> = Vec::new();
                for entry in &section.events {
                    if entry.time < prev {
                        return Err(invalid("schedule events must be sorted by time"));
                    }
                    prev = entry.time;
                    let known = requests.iter().find(|t| t.request.id == entry.vn);
                    let op = match entry.op {
                        EventOp::Depart => {
                            if entry.traffic.is_some() {
                                return Err(invalid(format!(
                                    "depart event for `{}` must not carry traffic",
                                    entry.vn
                                )));
                            }
                            if known.is_none() {
                                return Err(invalid(format!(
                                    "depart event names unknown vn `{}`",
                                    entry.vn
                                )));
                            }
                            ScheduledOp::Departure {
                                vn_id: entry.vn.clone(),
                            }
                        }
                        EventOp::TrafficChange => {
                            let Some(timed) = known else {
                                return Err(invalid(format!(
                                    "traffic change names unknown vn `{}`",
                                    entry.vn
                                )));
                            };
                            let Some(traffic) = entry.traffic.clone() else {
                                return Err(invalid(format!(
                                    "traffic change for `{}` carries no traffic table",
                                    entry.vn
                                )));
                            };
                            let model: TrafficModel = traffic.into();
                            model.validate().map_err(|e| {
                                invalid(format!("traffic change for `{}`: {e}", entry.vn))
                            })?;
                            if model.node_count() != timed.request.node_count() {
                                return Err(invalid(format!(
                                    "traffic change for `{}` covers {} nodes, slice has {}",
                                    entry.vn,
                                    model.node_count(),
                                    timed.request.node_count()
                                )));
                            }
                            ScheduledOp::TrafficChange {
                                vn_id: entry.vn.clone(),
                                traffic: model,
                            }
                        }
                    };
                    events.push(ScheduledEvent {
                        time: entry.time,
                        op,
                    });
                }
                for timed in &requests {
                    if timed.start > 0.0 {
                        events.push(ScheduledEvent {
                            time: timed.start,
                            op: ScheduledOp::Arrival(Box::new(timed.request.clone())),
                        });
                    }
                }
                events.sort_by(|a, b| a.time.total_cmp(&b.time));
                Some(ScheduleSpec {
                    epoch_length: section.epoch_length,
                    epochs: section.epochs,
                    batches: section.batches,
                    events,
                })
            }
        };
        if schedule.is_none() && requests.iter().any(|t| t.start > 0.0) {
            return Err(invalid(
                "vns with start > 0 need a schedule section to arrive in",
            ));
        }

        Ok(LoadedScenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            seed: self.seed.unwrap_or(0),
            substrate,
            requests,
            prices,
            portfolios,
            compat,
            schedule,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    const TWO_SLICE_SCENARIO: &str = r#"
name = "two-slices"
seed = 42
prices = [0.8, 0.2, 0.05, 0.1]

[substrate]
nodes = [
    { id = "ran0", kind = "radio-access", capacity = 5000.0 },
    { id = "sgw0", kind = "serving-gateway", capacity = 6000.0 },
    { id = "apgw0", kind = "admin-gateway", capacity = 2000.0 },
    { id = "pgw0", kind = "packet-gateway", capacity = 6000.0 },
]
links = [
    { a = "ran0", b = "sgw0" },
    { a = "sgw0", b = "apgw0", bandwidth = 3000.0 },
    { a = "sgw0", b = "pgw0" },
]

[[vns]]
id = "video-upload"
sla_latency = 0.010
budget = 5000.0
priority = 10
nodes = [
    { kind = "radio-access" },
    { kind = "serving-gateway" },
    { kind = "admin-gateway" },
    { kind = "packet-gateway" },
]
links = [[0, 1], [1, 2], [1, 3]]

[vns.traffic]
external_arrivals = [2000.0, 0.0, 0.0, 0.0]
routing = [
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.1, 0.9],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
]
mean_packet_size_bits = 1e6

[[vns]]
id = "monitoring"
sla_latency = 0.020
budget = 900.0
nodes = [
    { kind = "radio-access" },
    { kind = "serving-gateway" },
    { kind = "admin-gateway" },
    { kind = "packet-gateway" },
]
links = [[0, 1], [1, 2], [1, 3]]

[vns.traffic]
external_arrivals = [50.0, 0.0, 0.0, 0.0]
routing = [
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.5, 0.5],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
]
mean_packet_size_bits = 1e6

[price_grid]
portfolios = [[0.8, 0.2, 0.05, 0.1], [0.5, 0.15, 0.1, 0.15]]

[schedule]
epoch_length = 5.0
epochs = 4

[[schedule.events]]
time = 10.0
op = "depart"
vn = "monitoring"
"#;

    #[test]
    fn parses_and_converts_the_reference_scenario() {
        let scenario = Scenario::from_str(TWO_SLICE_SCENARIO).unwrap();
        let loaded = scenario.to_model().unwrap();
        assert_eq!(loaded.requests.len(), 2);
        assert_eq!(loaded.substrate.nodes.len(), 4);
        assert_eq!(loaded.prices.prices, vec![0.8, 0.2, 0.05, 0.1]);
        assert_eq!(loaded.portfolios.len(), 2);
        assert!(loaded.substrate.links[0].bandwidth.is_infinite());
        assert_eq!(loaded.substrate.links[1].bandwidth, 3000.0);
        let schedule = loaded.schedule.unwrap();
        assert_eq!(schedule.events.len(), 1);
        assert_eq!(loaded.seed, 42);
    }

    #[test]
    fn round_trips_through_serialization() {
        let scenario = Scenario::from_str(TWO_SLICE_SCENARIO).unwrap();
        let text = scenario.to_toml();
        let again = Scenario::from_str(&text).unwrap();
        assert_eq!(scenario, again);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let with_extra = TWO_SLICE_SCENARIO.replace("seed = 42", "seed = 42\nbogus_key = 1");
        assert!(matches!(
            Scenario::from_str(&with_extra),
            Err(ScenarioError::Parse(_))
        ));
        let node_extra = TWO_SLICE_SCENARIO.replace(
            r#"{ id = "ran0", kind = "radio-access", capacity = 5000.0 }"#,
            r#"{ id = "ran0", kind = "radio-access", capacity = 5000.0, color = "red" }"#,
        );
        assert!(matches!(
            Scenario::from_str(&node_extra),
            Err(ScenarioError::Parse(_))
        ));
    }

    #[test]
    fn dangling_event_reference_is_invalid() {
        let bad = TWO_SLICE_SCENARIO.replace("vn = \"monitoring\"", "vn = \"ghost\"");
        let scenario = Scenario::from_str(&bad).unwrap();
        assert!(matches!(
            scenario.to_model(),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn short_price_vector_is_invalid() {
        let bad =
            TWO_SLICE_SCENARIO.replace("prices = [0.8, 0.2, 0.05, 0.1]", "prices = [0.8, 0.2]");
        let scenario = Scenario::from_str(&bad).unwrap();
        assert!(matches!(
            scenario.to_model(),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn traffic_change_requires_a_traffic_table() {
        let bad = TWO_SLICE_SCENARIO.replace("op = \"depart\"", "op = \"traffic-change\"");
        let scenario = Scenario::from_str(&bad).unwrap();
        assert!(matches!(
            scenario.to_model(),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn compatibility_rules_widen_placement() {
        let extra = format!(
            "{TWO_SLICE_SCENARIO}\n[[compatibility]]\nvirtual_kind = \"generic\"\nsubstrate_kinds = [\"generic\", \"serving-gateway\"]\n"
        );
        let scenario = Scenario::from_str(&extra).unwrap();
        let loaded = scenario.to_model().unwrap();
        assert!(loaded
            .compat
            .allows(NodeKind::Generic, NodeKind::ServingGateway));
        assert!(!loaded
            .compat
            .allows(NodeKind::Generic, NodeKind::RadioAccess));
    }
}
