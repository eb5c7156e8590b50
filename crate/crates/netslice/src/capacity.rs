//! SLA-driven capacity sizing.
//!
//! A slice leases service rate `mu_i` at unit price `p_i` and must keep its
//! mean end-to-end delay under `T`. Minimizing the leasing cost
//! `sum p_i mu_i` subject to `sum lambda_i / (mu_i - lambda_i) <= lambda T`
//! is convex; because the cost is linear the delay constraint is active at
//! the optimum, and the first-order conditions give the one-parameter family
//!
//! ```text
//! mu_i(alpha) = lambda_i + sqrt(alpha * lambda_i / p_i)
//! ```
//!
//! with the multiplier `alpha` fixed by the constraint:
//!
//! ```text
//! mu_i = lambda_i + (sum_j sqrt(p_j lambda_j)) * sqrt(lambda_i / p_i) / (lambda T)
//! ```
//!
//! [`optimal_capacity`] evaluates the closed form;
//! [`brute_force_capacity_oracle`] finds `alpha` by numeric bracketing and
//! bisection instead, so the two routes only agree if the algebra is right.
//! Nodes that carry no traffic lease nothing (`mu_i = 0`) and are excluded
//! from the constraint sum.

use crate::error::{Error, Result};
use crate::model::PriceVector;
use crate::queueing::FlowSolution;

/// A sized allocation: service rates, their cost, and the multiplier that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityPlan {
    /// Service rate per virtual node, packets/second. Zero for nodes with no
    /// traffic.
    pub mus: Vec<f64>,
    pub total_cost: f64,
    pub per_node_cost: Vec<f64>,
    /// Lagrange multiplier coupling the delay bound to the cost objective.
    pub kkt_multiplier: f64,
    /// `T` minus the delay the plan actually achieves, seconds. Zero (up to
    /// rounding) unless a headroom floor lifted some rate above the optimum.
    pub slack_latency: f64,
}

/// Sizing options. The headroom floor `mu_i >= (1 + eps) * lambda_i` guards
/// against plans that sit so close to `lambda_i` at loose SLAs that any
/// traffic estimation error builds a backlog. It is off unless requested.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CapacityOptions {
    /// `Some(eps)` enforces `mu_i >= (1 + eps) * lambda_i`.
    pub min_headroom: Option<f64>,
}

impl CapacityOptions {
    /// Conventional floor fraction when the caller wants one.
    pub const DEFAULT_HEADROOM: f64 = 0.01;

    pub fn with_default_headroom() -> Self {
        Self {
            min_headroom: Some(Self::DEFAULT_HEADROOM),
        }
    }
}

fn check_inputs(flow: &FlowSolution, prices: &PriceVector, sla_latency: f64) -> Result<()> {
    if !(sla_latency > 0.0) || !sla_latency.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sla latency must be positive and finite, got {sla_latency}"
        )));
    }
    if prices.len() != flow.lambdas.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} prices for {} nodes",
            prices.len(),
            flow.lambdas.len()
        )));
    }
    for (i, (&l, &p)) in flow.lambdas.iter().zip(&prices.prices).enumerate() {
        if l > 0.0 && !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "node {i} carries traffic but has price {p}"
            )));
        }
    }
    if flow.total_external <= 0.0 || flow.lambdas.iter().all(|&l| l == 0.0) {
        return Err(Error::Degenerate("no traffic to size capacity for".into()));
    }
    Ok(())
}

/// Build the plan for a given multiplier, flooring if requested.
fn plan_for_alpha(
    flow: &FlowSolution,
    prices: &PriceVector,
    sla_latency: f64,
    alpha: f64,
    options: CapacityOptions,
) -> CapacityPlan {
    let mut mus = Vec::with_capacity(flow.lambdas.len());
    let mut per_node_cost = Vec::with_capacity(flow.lambdas.len());
    let mut total_cost = 0.0;
    let mut achieved_sum = 0.0;
    for (&l, &p) in flow.lambdas.iter().zip(&prices.prices) {
        if l == 0.0 {
            mus.push(0.0);
            per_node_cost.push(0.0);
            continue;
        }
        let mut mu = l + (alpha * l / p).sqrt();
        if let Some(eps) = options.min_headroom {
            mu = mu.max((1.0 + eps) * l);
        }
        achieved_sum += l / (mu - l);
        let cost = p * mu;
        mus.push(mu);
        per_node_cost.push(cost);
        total_cost += cost;
    }
    let achieved_delay = achieved_sum / flow.total_external;
    CapacityPlan {
        mus,
        total_cost,
        per_node_cost,
        kkt_multiplier: alpha,
        slack_latency: sla_latency - achieved_delay,
    }
}

/// Cost-minimal service rates meeting the delay bound, by the closed form.
pub fn optimal_capacity(
    flow: &FlowSolution,
    prices: &PriceVector,
    sla_latency: f64,
) -> Result<CapacityPlan> {
    optimal_capacity_with(flow, prices, sla_latency, CapacityOptions::default())
}

/// [`optimal_capacity`] with an optional headroom floor.
pub fn optimal_capacity_with(
    flow: &FlowSolution,
    prices: &PriceVector,
    sla_latency: f64,
    options: CapacityOptions,
) -> Result<CapacityPlan> {
    check_inputs(flow, prices, sla_latency)?;
    let budget = flow.total_external * sla_latency;
    let s: f64 = flow
        .lambdas
        .iter()
        .zip(&prices.prices)
        .filter(|(&l, _)| l > 0.0)
        .map(|(&l, &p)| (p * l).sqrt())
        .sum();
    let alpha = (s / budget) * (s / budget);
    Ok(plan_for_alpha(flow, prices, sla_latency, alpha, options))
}

/// One plan per SLA value. `t_values` must be strictly ascending and
/// positive.
pub fn capacity_sweep(
    flow: &FlowSolution,
    prices: &PriceVector,
    t_values: &[f64],
) -> Result<Vec<CapacityPlan>> {
    if t_values.is_empty() {
        return Err(Error::InvalidParameter("empty sweep".into()));
    }
    for pair in t_values.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(Error::InvalidParameter(
                "sweep latencies must be strictly ascending".into(),
            ));
        }
    }
    t_values
        .iter()
        .map(|&t| optimal_capacity(flow, prices, t))
        .collect()
}

/// Per-node cost `p_i * mu_i` of a plan.
pub fn cost_breakdown(plan: &CapacityPlan, prices: &PriceVector) -> Result<Vec<f64>> {
    if prices.len() != plan.mus.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} prices for {} rates",
            prices.len(),
            plan.mus.len()
        )));
    }
    Ok(plan
        .mus
        .iter()
        .zip(&prices.prices)
        .map(|(&m, &p)| if m == 0.0 { 0.0 } else { p * m })
        .collect())
}

/// Wrap externally pinned service rates into a plan: cost them out, check
/// stability, and record the latency slack they leave. The multiplier is
/// zero — nothing was optimized.
pub fn plan_from_fixed(
    flow: &FlowSolution,
    prices: &PriceVector,
    sla_latency: f64,
    mus: &[f64],
) -> Result<CapacityPlan> {
    check_inputs(flow, prices, sla_latency)?;
    if mus.len() != flow.lambdas.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} pinned rates for {} nodes",
            mus.len(),
            flow.lambdas.len()
        )));
    }
    if !crate::queueing::is_stable(flow, mus)? {
        return Err(Error::Unstable(
            "pinned capacities cannot carry the offered traffic".into(),
        ));
    }
    let mut achieved_sum = 0.0;
    let mut per_node_cost = Vec::with_capacity(mus.len());
    let mut total_cost = 0.0;
    for ((&l, &mu), &p) in flow.lambdas.iter().zip(mus).zip(&prices.prices) {
        if l > 0.0 {
            achieved_sum += l / (mu - l);
        }
        let cost = if mu == 0.0 { 0.0 } else { p * mu };
        per_node_cost.push(cost);
        total_cost += cost;
    }
    Ok(CapacityPlan {
        mus: mus.to_vec(),
        total_cost,
        per_node_cost,
        kkt_multiplier: 0.0,
        slack_latency: sla_latency - achieved_sum / flow.total_external,
    })
}

/// Largest node count the oracle accepts.
pub const ORACLE_MAX_NODES: usize = 6;

/// Independent numeric route to the same optimum: the stationarity family
/// `mu_i(alpha) = lambda_i + sqrt(alpha lambda_i / p_i)` makes the achieved
/// constraint sum strictly decreasing in `alpha`, so the active-constraint
/// point is found by scanning a log-spaced `alpha` grid of `grid_resolution`
/// cells for a sign change and bisecting inside it. No closed-form expression
/// for `alpha` is used anywhere.
pub fn brute_force_capacity_oracle(
    flow: &FlowSolution,
    prices: &PriceVector,
    sla_latency: f64,
    grid_resolution: usize,
) -> Result<CapacityPlan> {
    check_inputs(flow, prices, sla_latency)?;
    if flow.lambdas.len() > ORACLE_MAX_NODES {
        return Err(Error::TooLarge(format!(
            "oracle handles at most {ORACLE_MAX_NODES} nodes, got {}",
            flow.lambdas.len()
        )));
    }
    if grid_resolution < 2 {
        return Err(Error::InvalidParameter(
            "grid resolution must be at least 2".into(),
        ));
    }
    let budget = flow.total_external * sla_latency;
    let constraint_gap = |alpha: f64| -> f64 {
        // sum over traffic-carrying nodes of lambda_i/(mu_i(alpha)-lambda_i),
        // minus the budget; positive means the delay bound is still violated.
        flow.lambdas
            .iter()
            .zip(&prices.prices)
            .filter(|(&l, _)| l > 0.0)
            .map(|(&l, &p)| l / (alpha * l / p).sqrt())
            .sum::<f64>()
            - budget
    };

    // Bracket the root, then scan and bisect.
    let mut lo = 1e-30;
    let mut hi = 1e30;
    while constraint_gap(lo) < 0.0 {
        lo /= 1e6;
        if lo < 1e-300 {
            return Err(Error::Degenerate("constraint root escaped below".into()));
        }
    }
    while constraint_gap(hi) > 0.0 {
        hi *= 1e6;
        if hi > 1e300 {
            return Err(Error::Degenerate("constraint root escaped above".into()));
        }
    }
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    let step = (log_hi - log_lo) / grid_resolution as f64;
    let mut cell = None;
    for k in 0..grid_resolution {
        let a = (log_lo + step * k as f64).exp();
        let b = (log_lo + step * (k + 1) as f64).exp();
        if constraint_gap(a) >= 0.0 && constraint_gap(b) <= 0.0 {
            cell = Some((a, b));
            break;
        }
    }
    let (mut a, mut b) = cell.ok_or(Error::Degenerate("no sign change on alpha grid".into()))?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if constraint_gap(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a) <= f64::EPSILON * b {
            break;
        }
    }
    let alpha = 0.5 * (a + b);
    Ok(plan_for_alpha(
        flow,
        prices,
        sla_latency,
        alpha,
        CapacityOptions::default(),
    ))
}
