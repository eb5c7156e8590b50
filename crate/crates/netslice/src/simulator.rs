//! Two-time-scale simulation.
//!
//! Inside a slice (small scale), packets move through an event-driven network
//! of single-server FCFS queues with exponential service and probabilistic
//! routing, each slice drawing from its own RNG stream derived from the run
//! seed and the slice id — so runs are reproducible and slices are
//! statistically independent. Across slices (large scale), allocations are
//! frozen between epoch boundaries; at each boundary scheduled departures,
//! traffic changes, and arrivals are applied through the embedding module's
//! transactional operations. Every step is deterministic given the
//! configuration and seed.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::capacity::CapacityPlan;
use crate::embedding::{
    admit_dynamic, reallocate, release, AllocationState, EmbedOutcome, KindCompatibility,
};
use crate::error::{Error, Result};
use crate::model::{PriceVector, SubstrateNetwork, TrafficModel, VnRequest};
use crate::pricing::best_response;
use crate::queueing::{is_stable, mean_delay, solve_traffic_equations};

/// Batches used for the batch-means confidence interval; the first batch is
/// discarded as warm-up.
pub const DEFAULT_BATCHES: usize = 20;

/// Per-slice RNG stream: FNV-1a over the slice id, folded with the run seed.
/// Stable across platforms, so reports are reproducible everywhere.
pub fn derive_stream_seed(seed: u64, vn_id: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in seed.to_le_bytes().iter().chain(vn_id.as_bytes()) {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Two-sided 95% Student-t quantile for small degrees of freedom; the normal
/// value beyond the table.
fn t_quantile_975(df: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
        2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
        2.052, 2.048, 2.045, 2.042,
    ];
    if df == 0 {
        f64::INFINITY
    } else if df <= TABLE.len() {
        TABLE[df - 1]
    } else {
        1.96
    }
}

/// Batch-means estimate over a completion-ordered sojourn sequence: split
/// into `batches` equal-count batches, drop the first as warm-up, average the
/// rest, and halve a 95% t-interval over the batch means. Too few samples
/// fall back to the plain mean with an infinite half-width.
fn batch_means(sojourns: &[f64], batches: usize) -> (f64, f64) {
    let n = sojourns.len();
    if n == 0 {
        return (0.0, f64::INFINITY);
    }
    let size = n / batches;
    if batches < 3 || size == 0 {
        return (sojourns.iter().sum::<f64>() / n as f64, f64::INFINITY);
    }
    let means: Vec<f64> = (1..batches)
        .map(|b| sojourns[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (k - 1.0);
    let half = t_quantile_975(means.len() - 1) * (var / k).sqrt();
    (mean, half)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EvKind {
    /// External packet arrival at a node.
    Arrival { node: usize },
    /// The head-of-line packet at a node finishes service.
    Completion { node: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ev {
    time: f64,
    /// Tie-break so simultaneous events pop in scheduling order.
    seq: u64,
    kind: EvKind,
}

impl Eq for Ev {}

impl PartialOrd for Ev {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ev {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

/// Event-driven open queueing network for one slice. The clock only moves
/// forward through [`SliceSim::advance_until`], so a run can be segmented at
/// epoch boundaries without changing its event sequence.
#[derive(Debug, Clone)]
struct SliceSim {
    now: f64,
    rng: ChaCha8Rng,
    gammas: Vec<f64>,
    /// Cumulative routing thresholds per node: (upper bound, destination).
    routing_cum: Vec<Vec<(f64, usize)>>,
    mus: Vec<f64>,
    /// Entry timestamps of queued packets, head in service.
    queues: Vec<VecDeque<f64>>,
    heap: BinaryHeap<Reverse<Ev>>,
    seq: u64,
    arrival_pending: Vec<bool>,
    /// End-to-end sojourn of every exited packet, in completion order.
    sojourns: Vec<f64>,
    /// Packets served per node.
    served: Vec<u64>,
}

fn cumulative_routing(routing: &[Vec<f64>]) -> Vec<Vec<(f64, usize)>> {
    routing
        .iter()
        .map(|row| {
            let mut cum = 0.0;
            row.iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(j, &p)| {
                    cum += p;
                    (cum, j)
                })
                .collect()
        })
        .collect()
}

impl SliceSim {
    fn new(traffic: &TrafficModel, mus: &[f64], start_time: f64, rng: ChaCha8Rng) -> Self {
        let n = traffic.node_count();
        let mut sim = Self {
            now: start_time,
            rng,
            gammas: traffic.external_arrivals.clone(),
            routing_cum: cumulative_routing(&traffic.routing),
            mus: mus.to_vec(),
            queues: vec![VecDeque::new(); n],
            heap: BinaryHeap::new(),
            seq: 0,
            arrival_pending: vec![false; n],
            sojourns: Vec::new(),
            served: vec![0; n],
        };
        sim.schedule_missing_arrivals();
        sim
    }

    fn schedule(&mut self, time: f64, kind: EvKind) {
        self.seq += 1;
        self.heap.push(Reverse(Ev {
            time,
            seq: self.seq,
            kind,
        }));
    }

    fn exp_sample(&mut self, rate: f64) -> f64 {
        Exp::new(rate).expect("positive rate").sample(&mut self.rng)
    }

    fn schedule_missing_arrivals(&mut self) {
        for node in 0..self.gammas.len() {
            if self.gammas[node] > 0.0 && !self.arrival_pending[node] {
                let dt = self.exp_sample(self.gammas[node]);
                self.schedule(self.now + dt, EvKind::Arrival { node });
                self.arrival_pending[node] = true;
            }
        }
    }

    /// Swap in new traffic statistics and/or service rates. Events already on
    /// the calendar keep their old timing; every draw from here on uses the
    /// new parameters.
    fn set_params(&mut self, traffic: &TrafficModel, mus: &[f64]) {
        self.gammas = traffic.external_arrivals.clone();
        self.routing_cum = cumulative_routing(&traffic.routing);
        self.mus = mus.to_vec();
        self.schedule_missing_arrivals();
    }

    fn enqueue(&mut self, node: usize, entry: f64) {
        self.queues[node].push_back(entry);
        if self.queues[node].len() == 1 && self.mus[node] > 0.0 {
            let dt = self.exp_sample(self.mus[node]);
            self.schedule(self.now + dt, EvKind::Completion { node });
        }
    }

    fn advance_until(&mut self, t_end: f64) {
        while let Some(Reverse(ev)) = self.heap.peek().copied() {
            if ev.time > t_end {
                break;
            }
            self.heap.pop();
            self.now = ev.time;
            match ev.kind {
                EvKind::Arrival { node } => {
                    self.arrival_pending[node] = false;
                    self.enqueue(node, ev.time);
                    if self.gammas[node] > 0.0 {
                        let dt = self.exp_sample(self.gammas[node]);
                        self.schedule(ev.time + dt, EvKind::Arrival { node });
                        self.arrival_pending[node] = true;
                    }
                }
                EvKind::Completion { node } => {
                    let entry = self.queues[node]
                        .pop_front()
                        .expect("completion with empty queue");
                    self.served[node] += 1;
                    if !self.queues[node].is_empty() && self.mus[node] > 0.0 {
                        let dt = self.exp_sample(self.mus[node]);
                        self.schedule(ev.time + dt, EvKind::Completion { node });
                    }
                    let u: f64 = self.rng.random();
                    let target = self.routing_cum[node]
                        .iter()
                        .find(|&&(threshold, _)| u < threshold)
                        .map(|&(_, j)| j);
                    match target {
                        Some(j) => self.enqueue(j, entry),
                        None => self.sojourns.push(ev.time - entry),
                    }
                }
            }
        }
        self.now = t_end;
    }
}

/// Measurement of one slice's packet-level run.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceStats {
    /// Mean end-to-end sojourn over completed packets (warm-up batch
    /// excluded), seconds.
    pub measured_mean_delay: f64,
    /// 95% batch-means half-width, seconds.
    pub ci_half_width: f64,
    pub completed_packets: u64,
    /// Packets served per virtual node.
    pub per_node_served: Vec<u64>,
}

fn stats_from_sojourns(sojourns: &[f64], served: &[u64], batches: usize) -> SliceStats {
    let (mean, half) = batch_means(sojourns, batches);
    SliceStats {
        measured_mean_delay: mean,
        ci_half_width: half,
        completed_packets: sojourns.len() as u64,
        per_node_served: served.to_vec(),
    }
}

/// Packet-level simulation of one slice under a fixed plan. Refuses unstable
/// plans. Deterministic given `seed`; the RNG stream is derived from
/// `(seed, request.id)`, matching what [`run_two_time_scale`] uses for the
/// same slice.
pub fn simulate_slice_packets(
    request: &VnRequest,
    plan: &CapacityPlan,
    duration: f64,
    seed: u64,
) -> Result<SliceStats> {
    request.validate()?;
    if plan.mus.len() != request.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "plan sizes {} nodes, request has {}",
            plan.mus.len(),
            request.node_count()
        )));
    }
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "duration must be positive and finite, got {duration}"
        )));
    }
    let flow = solve_traffic_equations(&request.traffic)?;
    if !is_stable(&flow, &plan.mus)? {
        return Err(Error::Unstable(format!(
            "plan cannot carry vn `{}` traffic",
            request.id
        )));
    }
    let rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(seed, &request.id));
    let mut sim = SliceSim::new(&request.traffic, &plan.mus, 0.0, rng);
    sim.advance_until(duration);
    Ok(stats_from_sojourns(
        &sim.sojourns,
        &sim.served,
        DEFAULT_BATCHES,
    ))
}

/// A timed reallocation event. Times are seconds from the start of the run;
/// events take effect at the first epoch boundary at or after their time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledEvent {
    pub time: f64,
    pub op: ScheduledOp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduledOp {
    /// A new slice asks to join.
    Arrival(Box<VnRequest>),
    /// An active slice leaves and frees its allocation.
    Departure { vn_id: String },
    /// A slice's traffic statistics drift to a new model.
    TrafficChange {
        vn_id: String,
        traffic: TrafficModel,
    },
}

impl ScheduledOp {
    fn vn_id(&self) -> &str {
        match self {
            ScheduledOp::Arrival(request) => &request.id,
            ScheduledOp::Departure { vn_id } => vn_id,
            ScheduledOp::TrafficChange { vn_id, .. } => vn_id,
        }
    }

    /// Boundary ordering for simultaneous events: departures free capacity
    /// before traffic changes, which precede admissions.
    fn rank(&self) -> u8 {
        match self {
            ScheduledOp::Departure { .. } => 0,
            ScheduledOp::TrafficChange { .. } => 1,
            ScheduledOp::Arrival(_) => 2,
        }
    }
}

/// Large-time-scale configuration: epoch grid, scheduled events, seed, and
/// measurement batching.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochConfig {
    pub epoch_length: f64,
    pub epochs: usize,
    /// Must be sorted by time, all times within `[0, epochs * epoch_length]`.
    pub schedule: Vec<ScheduledEvent>,
    pub rng_seed: u64,
    /// Batch-means batches per slice (first is warm-up).
    pub batches: usize,
}

impl EpochConfig {
    pub fn new(
        epoch_length: f64,
        epochs: usize,
        schedule: Vec<ScheduledEvent>,
        rng_seed: u64,
    ) -> Self {
        Self {
            epoch_length,
            epochs,
            schedule,
            rng_seed,
            batches: DEFAULT_BATCHES,
        }
    }

    fn validate(&self, initial_requests: &[VnRequest]) -> Result<()> {
        if !(self.epoch_length > 0.0) || !self.epoch_length.is_finite() {
            return Err(Error::MalformedSchedule(
                "epoch length must be positive and finite".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::MalformedSchedule("at least one epoch".into()));
        }
        if self.batches < 3 {
            return Err(Error::MalformedSchedule(
                "batch means need at least 3 batches".into(),
            ));
        }
        let horizon = self.epoch_length * self.epochs as f64;
        let mut prev = 0.0;
        for event in &self.schedule {
            if !(event.time >= 0.0) || event.time > horizon {
                return Err(Error::MalformedSchedule(format!(
                    "event at t={} outside [0, {horizon}]",
                    event.time
                )));
            }
            if event.time < prev {
                return Err(Error::MalformedSchedule(
                    "events must be sorted by time".into(),
                ));
            }
            prev = event.time;
            if let ScheduledOp::Arrival(request) = &event.op {
                request.validate()?;
            }
            if let ScheduledOp::TrafficChange { traffic, .. } = &event.op {
                traffic.validate()?;
            }
        }
        let mut ids: BTreeSet<&str> = initial_requests.iter().map(|r| r.id.as_str()).collect();
        if ids.len() != initial_requests.len() {
            return Err(Error::MalformedSchedule("duplicate initial vn ids".into()));
        }
        for event in &self.schedule {
            if let ScheduledOp::Arrival(request) = &event.op {
                if !ids.insert(&request.id) {
                    return Err(Error::MalformedSchedule(format!(
                        "vn id `{}` arrives more than once",
                        request.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One admission-control decision, in the order it was taken.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionRecord {
    pub time: f64,
    pub vn_id: String,
    /// `admitted`, `rejected`, `released`, `resized`, `degraded`, `skipped`.
    pub decision: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeUtilization {
    pub node_id: String,
    /// Allocated fraction of the node's capacity, in `[0, 1]`.
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochUtilization {
    pub epoch: usize,
    pub per_node: Vec<NodeUtilization>,
}

/// Final measurement of one slice across its lifetime in the run.
#[derive(Debug, Clone, PartialEq)]
pub struct VnDelayReport {
    pub vn_id: String,
    /// Steady-state prediction under the slice's latest plan and traffic;
    /// infinite when a degraded slice became unstable.
    pub analytic_delay: f64,
    pub measured_delay: f64,
    pub ci_half_width: f64,
    pub completed_packets: u64,
}

/// Everything a two-time-scale run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Per-slice measurements, ascending vn id, including departed slices.
    pub per_vn: Vec<VnDelayReport>,
    pub admission_log: Vec<AdmissionRecord>,
    /// Time-averaged allocation fraction per substrate node, ascending id.
    pub utilization: Vec<NodeUtilization>,
    pub epoch_utilization: Vec<EpochUtilization>,
}

struct SliceRuntime {
    request: VnRequest,
    plan: CapacityPlan,
    sim: SliceSim,
    analytic_delay: f64,
}

struct FinishedSlice {
    analytic_delay: f64,
    sojourns: Vec<f64>,
    served: Vec<u64>,
}

fn analytic_or_inf(traffic: &TrafficModel, mus: &[f64]) -> f64 {
    match solve_traffic_equations(traffic).and_then(|flow| mean_delay(&flow, mus)) {
        Ok(metrics) => metrics.mean_system_delay,
        Err(_) => f64::INFINITY,
    }
}

/// Run the epoch-driven loop: admissions, departures, and traffic drift are
/// applied at epoch boundaries (allocations frozen in between) while each
/// admitted slice's packet simulation advances through the epoch. Slices are
/// sized by their best response to `prices`. Fully deterministic given the
/// configuration.
pub fn run_two_time_scale(
    substrate: &SubstrateNetwork,
    prices: &PriceVector,
    config: &EpochConfig,
    initial_requests: &[VnRequest],
    compat: &KindCompatibility,
) -> Result<SimReport> {
    config.validate(initial_requests)?;
    prices.validate()?;
    let mut state = AllocationState::new(substrate.clone())?;
    let mut slices: BTreeMap<String, SliceRuntime> = BTreeMap::new();
    let mut finished: BTreeMap<String, FinishedSlice> = BTreeMap::new();
    let mut log: Vec<AdmissionRecord> = Vec::new();
    let mut epoch_utilization: Vec<EpochUtilization> = Vec::new();

    // Boundary order: time, then departures < traffic changes < arrivals,
    // then vn id; the input is time-sorted already so this sort is stable
    // bookkeeping, not a reinterpretation.
    let mut events: Vec<&ScheduledEvent> = config.schedule.iter().collect();
    events.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then_with(|| a.op.rank().cmp(&b.op.rank()))
            .then_with(|| a.op.vn_id().cmp(b.op.vn_id()))
    });
    let mut cursor = 0usize;

    let admit = |state: &mut AllocationState,
                 slices: &mut BTreeMap<String, SliceRuntime>,
                 log: &mut Vec<AdmissionRecord>,
                 request: &VnRequest,
                 now: f64|
     -> Result<()> {
        let plan = best_response(request, prices)?;
        match admit_dynamic(state, request, &plan, compat)? {
            EmbedOutcome::Embedded(_) => {
                let flow = solve_traffic_equations(&request.traffic)?;
                let analytic = mean_delay(&flow, &plan.mus)?.mean_system_delay;
                let rng =
                    ChaCha8Rng::seed_from_u64(derive_stream_seed(config.rng_seed, &request.id));
                let sim = SliceSim::new(&request.traffic, &plan.mus, now, rng);
                slices.insert(
                    request.id.clone(),
                    SliceRuntime {
                        request: request.clone(),
                        plan,
                        sim,
                        analytic_delay: analytic,
                    },
                );
                log.push(AdmissionRecord {
                    time: now,
                    vn_id: request.id.clone(),
                    decision: "admitted".into(),
                    reason: String::new(),
                });
            }
            EmbedOutcome::Rejected(reason) => {
                log.push(AdmissionRecord {
                    time: now,
                    vn_id: request.id.clone(),
                    decision: "rejected".into(),
                    reason: reason.label().into(),
                });
            }
        }
        Ok(())
    };

    // Initial slices join at t = 0, highest priority first.
    let mut initial_order: Vec<&VnRequest> = initial_requests.iter().collect();
    initial_order.sort_by(|a, b| b.priority.cmp(&a.priority).then_with(|| a.id.cmp(&b.id)));
    for request in initial_order {
        admit(&mut state, &mut slices, &mut log, request, 0.0)?;
    }

    for epoch in 0..=config.epochs {
        let boundary = config.epoch_length * epoch as f64;
        while cursor < events.len() && events[cursor].time <= boundary {
            let event = events[cursor];
            cursor += 1;
            match &event.op {
                ScheduledOp::Departure { vn_id } => {
                    if slices.contains_key(vn_id) {
                        release(&mut state, vn_id)?;
                        let runtime = slices.remove(vn_id).expect("checked above");
                        finished.insert(
                            vn_id.clone(),
                            FinishedSlice {
                                analytic_delay: runtime.analytic_delay,
                                sojourns: runtime.sim.sojourns,
                                served: runtime.sim.served,
                            },
                        );
                        log.push(AdmissionRecord {
                            time: boundary,
                            vn_id: vn_id.clone(),
                            decision: "released".into(),
                            reason: String::new(),
                        });
                    } else {
                        log.push(AdmissionRecord {
                            time: boundary,
                            vn_id: vn_id.clone(),
                            decision: "skipped".into(),
                            reason: "vn not active".into(),
                        });
                    }
                }
                ScheduledOp::TrafficChange { vn_id, traffic } => {
                    let Some(runtime) = slices.get_mut(vn_id) else {
                        log.push(AdmissionRecord {
                            time: boundary,
                            vn_id: vn_id.clone(),
                            decision: "skipped".into(),
                            reason: "vn not active".into(),
                        });
                        continue;
                    };
                    if traffic.node_count() != runtime.request.node_count() {
                        return Err(Error::MalformedSchedule(format!(
                            "traffic change for `{vn_id}` covers {} nodes, slice has {}",
                            traffic.node_count(),
                            runtime.request.node_count()
                        )));
                    }
                    let mut updated = runtime.request.clone();
                    updated.traffic = traffic.clone();
                    let new_plan = best_response(&updated, prices)?;
                    match reallocate(&mut state, vn_id, &updated, &new_plan)? {
                        EmbedOutcome::Embedded(_) => {
                            runtime.analytic_delay = analytic_or_inf(traffic, &new_plan.mus);
                            runtime.sim.set_params(traffic, &new_plan.mus);
                            runtime.request = updated;
                            runtime.plan = new_plan;
                            log.push(AdmissionRecord {
                                time: boundary,
                                vn_id: vn_id.clone(),
                                decision: "resized".into(),
                                reason: String::new(),
                            });
                        }
                        EmbedOutcome::Rejected(reason) => {
                            // Traffic drifts regardless; the slice keeps its
                            // old allocation and may now run degraded.
                            runtime.analytic_delay = analytic_or_inf(traffic, &runtime.plan.mus);
                            let mus = runtime.plan.mus.clone();
                            runtime.sim.set_params(traffic, &mus);
                            runtime.request = updated;
                            log.push(AdmissionRecord {
                                time: boundary,
                                vn_id: vn_id.clone(),
                                decision: "degraded".into(),
                                reason: reason.label().into(),
                            });
                        }
                    }
                }
                ScheduledOp::Arrival(request) => {
                    admit(&mut state, &mut slices, &mut log, request, boundary)?;
                }
            }
        }
        if epoch == config.epochs {
            break;
        }
        let per_node: Vec<NodeUtilization> = {
            let mut nodes: Vec<&crate::model::SubstrateNode> =
                state.substrate.nodes.iter().collect();
            nodes.sort_by(|a, b| a.id.cmp(&b.id));
            nodes
                .iter()
                .map(|n| NodeUtilization {
                    node_id: n.id.clone(),
                    utilization: (n.capacity - n.residual) / n.capacity,
                })
                .collect()
        };
        epoch_utilization.push(EpochUtilization { epoch, per_node });
        let epoch_end = config.epoch_length * (epoch + 1) as f64;
        for runtime in slices.values_mut() {
            runtime.sim.advance_until(epoch_end);
        }
    }

    for (vn_id, runtime) in slices {
        finished.insert(
            vn_id,
            FinishedSlice {
                analytic_delay: runtime.analytic_delay,
                sojourns: runtime.sim.sojourns,
                served: runtime.sim.served,
            },
        );
    }
    let per_vn: Vec<VnDelayReport> = finished
        .into_iter()
        .map(|(vn_id, slice)| {
            let stats = stats_from_sojourns(&slice.sojourns, &slice.served, config.batches);
            VnDelayReport {
                vn_id,
                analytic_delay: slice.analytic_delay,
                measured_delay: stats.measured_mean_delay,
                ci_half_width: stats.ci_half_width,
                completed_packets: stats.completed_packets,
            }
        })
        .collect();

    let utilization: Vec<NodeUtilization> = {
        let mut ids: Vec<String> = state.substrate.nodes.iter().map(|n| n.id.clone()).collect();
        ids.sort();
        ids.into_iter()
            .map(|node_id| {
                let sum: f64 = epoch_utilization
                    .iter()
                    .map(|e| {
                        e.per_node
                            .iter()
                            .find(|u| u.node_id == node_id)
                            .map(|u| u.utilization)
                            .unwrap_or(0.0)
                    })
                    .sum();
                NodeUtilization {
                    node_id,
                    utilization: sum / config.epochs as f64,
                }
            })
            .collect()
    };

    Ok(SimReport {
        per_vn,
        admission_log: log,
        utilization,
        epoch_utilization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::optimal_capacity;
    use crate::model::{case_study_topology, NodeKind, SubstrateNode, VirtualNode};

    fn single_node_request(id: &str, lambda: f64, t: f64) -> VnRequest {
        VnRequest {
            id: id.into(),
            virtual_nodes: vec![VirtualNode {
                kind: NodeKind::Generic,
                fixed_capacity: None,
            }],
            virtual_links: vec![],
            traffic: TrafficModel {
                external_arrivals: vec![lambda],
                routing: vec![vec![0.0]],
                mean_packet_size_bits: 1.0e6,
            },
            sla_latency: t,
            budget: f64::INFINITY,
            priority: 0,
        }
    }

    fn plan_for(request: &VnRequest, prices: &[f64]) -> CapacityPlan {
        let flow = solve_traffic_equations(&request.traffic).unwrap();
        optimal_capacity(
            &flow,
            &PriceVector::new(prices.to_vec()),
            request.sla_latency,
        )
        .unwrap()
    }

    fn generic_substrate(capacity: f64) -> SubstrateNetwork {
        SubstrateNetwork {
            nodes: vec![SubstrateNode {
                id: "g0".into(),
                kind: NodeKind::Generic,
                capacity,
                residual: capacity,
            }],
            links: vec![],
        }
    }

    #[test]
    fn mm1_control_matches_theory() {
        let request = single_node_request("mm1", 50.0, 0.1);
        let plan = CapacityPlan {
            mus: vec![100.0],
            total_cost: 100.0,
            per_node_cost: vec![100.0],
            kkt_multiplier: 0.0,
            slack_latency: 0.0,
        };
        let stats = simulate_slice_packets(&request, &plan, 5_000.0, 7).unwrap();
        // ~250k packets; 1/(mu - lambda) = 0.02 s
        let tol = (0.02f64 * 0.02).max(stats.ci_half_width);
        assert!(
            (stats.measured_mean_delay - 0.02).abs() <= tol,
            "measured {} vs 0.02 (ci {})",
            stats.measured_mean_delay,
            stats.ci_half_width
        );
    }

    #[test]
    fn zero_branch_serves_no_packets() {
        let mut request = case_study_topology(200.0, 0.0).unwrap();
        request.sla_latency = 0.05;
        let plan = plan_for(&request, &[0.8, 0.2, 0.05, 0.1]);
        assert_eq!(plan.mus[2], 0.0);
        let stats = simulate_slice_packets(&request, &plan, 50.0, 11).unwrap();
        assert_eq!(stats.per_node_served[2], 0);
        assert!(stats.per_node_served[3] > 0);
    }

    #[test]
    fn identical_seeds_reproduce_identical_stats() {
        let request = single_node_request("det", 40.0, 0.1);
        let plan = plan_for(&request, &[1.0]);
        let a = simulate_slice_packets(&request, &plan, 200.0, 99).unwrap();
        let b = simulate_slice_packets(&request, &plan, 200.0, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_slice_packets(&request, &plan, 200.0, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unstable_plan_is_refused() {
        let request = single_node_request("hot", 100.0, 0.1);
        let plan = CapacityPlan {
            mus: vec![90.0],
            total_cost: 90.0,
            per_node_cost: vec![90.0],
            kkt_multiplier: 0.0,
            slack_latency: 0.0,
        };
        assert!(matches!(
            simulate_slice_packets(&request, &plan, 10.0, 1),
            Err(Error::Unstable(_))
        ));
    }

    #[test]
    fn eventless_run_reduces_to_the_slice_simulation() {
        let request = single_node_request("solo", 30.0, 0.1);
        let config = EpochConfig::new(25.0, 8, vec![], 1234);
        let report = run_two_time_scale(
            &generic_substrate(10_000.0),
            &PriceVector::new(vec![1.0]),
            &config,
            std::slice::from_ref(&request),
            &KindCompatibility::exact(),
        )
        .unwrap();
        let plan = plan_for(&request, &[1.0]);
        let standalone = simulate_slice_packets(&request, &plan, 200.0, 1234).unwrap();
        assert_eq!(report.per_vn.len(), 1);
        let vn = &report.per_vn[0];
        assert_eq!(vn.measured_delay, standalone.measured_mean_delay);
        assert_eq!(vn.ci_half_width, standalone.ci_half_width);
        assert_eq!(vn.completed_packets, standalone.completed_packets);
    }

    #[test]
    fn identical_configurations_yield_identical_reports() {
        let request = single_node_request("twin", 40.0, 0.1);
        let schedule = vec![ScheduledEvent {
            time: 30.0,
            op: ScheduledOp::TrafficChange {
                vn_id: "twin".into(),
                traffic: TrafficModel {
                    external_arrivals: vec![55.0],
                    routing: vec![vec![0.0]],
                    mean_packet_size_bits: 1.0e6,
                },
            },
        }];
        let run = || {
            run_two_time_scale(
                &generic_substrate(10_000.0),
                &PriceVector::new(vec![1.0]),
                &EpochConfig::new(15.0, 4, schedule.clone(), 321),
                std::slice::from_ref(&request),
                &KindCompatibility::exact(),
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejected_arrival_leaves_the_running_slice_untouched() {
        let first = single_node_request("first", 50.0, 0.1);
        let mut second = single_node_request("second", 500.0, 0.1);
        second.priority = 1;
        let schedule = vec![ScheduledEvent {
            time: 50.0,
            op: ScheduledOp::Arrival(Box::new(second)),
        }];
        let config = EpochConfig::new(25.0, 8, schedule, 77);
        // capacity fits first (mu = 60) but not second (mu = 510)
        let substrate = generic_substrate(100.0);
        let prices = PriceVector::new(vec![1.0]);
        let report = run_two_time_scale(
            &substrate,
            &prices,
            &config,
            std::slice::from_ref(&first),
            &KindCompatibility::exact(),
        )
        .unwrap();
        let rejected: Vec<_> = report
            .admission_log
            .iter()
            .filter(|r| r.decision == "rejected")
            .collect();
        assert_eq!(rejected.len(), 1);
        assert_eq!(rejected[0].vn_id, "second");

        // the survivor's measurement equals a run without the intruder
        let solo = run_two_time_scale(
            &substrate,
            &prices,
            &EpochConfig::new(25.0, 8, vec![], 77),
            &[first],
            &KindCompatibility::exact(),
        )
        .unwrap();
        let delay = |r: &SimReport| r.per_vn[0].measured_delay;
        assert_eq!(delay(&report), delay(&solo));
    }

    #[test]
    fn resizing_restores_the_latency_target_after_drift() {
        let request = single_node_request("drift", 50.0, 0.1);
        let new_traffic = TrafficModel {
            external_arrivals: vec![100.0],
            routing: vec![vec![0.0]],
            mean_packet_size_bits: 1.0e6,
        };
        let schedule = vec![ScheduledEvent {
            time: 50.0,
            op: ScheduledOp::TrafficChange {
                vn_id: "drift".into(),
                traffic: new_traffic,
            },
        }];
        let config = EpochConfig::new(50.0, 4, schedule, 5);
        let report = run_two_time_scale(
            &generic_substrate(10_000.0),
            &PriceVector::new(vec![1.0]),
            &config,
            &[request],
            &KindCompatibility::exact(),
        )
        .unwrap();
        assert!(report.admission_log.iter().any(|r| r.decision == "resized"));
        let vn = &report.per_vn[0];
        assert!((vn.analytic_delay - 0.1).abs() <= 1e-9 * 0.1);
    }

    #[test]
    fn starved_resize_degrades_and_may_go_unstable() {
        let request = single_node_request("squeezed", 50.0, 0.1);
        let new_traffic = TrafficModel {
            external_arrivals: vec![90.0],
            routing: vec![vec![0.0]],
            mean_packet_size_bits: 1.0e6,
        };
        let schedule = vec![ScheduledEvent {
            time: 30.0,
            op: ScheduledOp::TrafficChange {
                vn_id: "squeezed".into(),
                traffic: new_traffic,
            },
        }];
        let config = EpochConfig::new(30.0, 3, schedule, 5);
        // pool fits the original mu = 60 only
        let report = run_two_time_scale(
            &generic_substrate(65.0),
            &PriceVector::new(vec![1.0]),
            &config,
            &[request],
            &KindCompatibility::exact(),
        )
        .unwrap();
        assert!(report
            .admission_log
            .iter()
            .any(|r| r.decision == "degraded"));
        // 90 pkt/s offered against mu = 60 held: unstable
        assert!(report.per_vn[0].analytic_delay.is_infinite());
    }

    #[test]
    fn utilization_stays_within_bounds() {
        let request = single_node_request("load", 50.0, 0.1);
        let config = EpochConfig::new(10.0, 5, vec![], 3);
        let report = run_two_time_scale(
            &generic_substrate(61.0),
            &PriceVector::new(vec![1.0]),
            &config,
            &[request],
            &KindCompatibility::exact(),
        )
        .unwrap();
        for epoch in &report.epoch_utilization {
            for u in &epoch.per_node {
                assert!((0.0..=1.0).contains(&u.utilization));
            }
        }
        assert!((report.utilization[0].utilization - 60.0 / 61.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_schedules_are_rejected() {
        let request = single_node_request("a", 10.0, 0.1);
        let late = vec![ScheduledEvent {
            time: 1e9,
            op: ScheduledOp::Departure { vn_id: "a".into() },
        }];
        let config = EpochConfig::new(10.0, 2, late, 0);
        assert!(matches!(
            run_two_time_scale(
                &generic_substrate(100.0),
                &PriceVector::new(vec![1.0]),
                &config,
                std::slice::from_ref(&request),
                &KindCompatibility::exact()
            ),
            Err(Error::MalformedSchedule(_))
        ));
        let unsorted = vec![
            ScheduledEvent {
                time: 15.0,
                op: ScheduledOp::Departure { vn_id: "a".into() },
            },
            ScheduledEvent {
                time: 5.0,
                op: ScheduledOp::Departure { vn_id: "a".into() },
            },
        ];
        let config = EpochConfig::new(10.0, 2, unsorted, 0);
        assert!(matches!(
            run_two_time_scale(
                &generic_substrate(100.0),
                &PriceVector::new(vec![1.0]),
                &config,
                &[request],
                &KindCompatibility::exact()
            ),
            Err(Error::MalformedSchedule(_))
        ));
    }

    #[test]
    fn departure_frees_room_for_a_later_arrival() {
        let first = single_node_request("early", 100.0, 0.1); // mu 110
        let bigger = single_node_request("later", 105.0, 0.1); // mu 115
        let schedule = vec![
            ScheduledEvent {
                time: 20.0,
                op: ScheduledOp::Departure {
                    vn_id: "early".into(),
                },
            },
            ScheduledEvent {
                time: 20.0,
                op: ScheduledOp::Arrival(Box::new(bigger)),
            },
        ];
        let config = EpochConfig::new(20.0, 3, schedule, 8);
        let report = run_two_time_scale(
            &generic_substrate(120.0),
            &PriceVector::new(vec![1.0]),
            &config,
            &[first],
            &KindCompatibility::exact(),
        )
        .unwrap();
        let decisions: Vec<(&str, &str)> = report
            .admission_log
            .iter()
            .map(|r| (r.vn_id.as_str(), r.decision.as_str()))
            .collect();
        assert_eq!(
            decisions,
            vec![
                ("early", "admitted"),
                ("early", "released"),
                ("later", "admitted"),
            ]
        );
    }
}
