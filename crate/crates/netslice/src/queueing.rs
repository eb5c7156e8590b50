//! Open Jackson network analysis.
//!
//! Every node is a single-server FCFS queue with exponential service; the
//! effective arrival rate at each node solves the traffic equations
//! `lambda = gamma + R^T lambda`, and each node then behaves as an
//! independent M/M/1 queue, so the mean number in system at node `i` is
//! `lambda_i / (mu_i - lambda_i)` and the mean end-to-end sojourn follows
//! from Little's law.

use crate::error::{Error, Result};
use crate::model::TrafficModel;

/// Effective per-node arrival rates after routing feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    /// packets/second entering each node (external + routed).
    pub lambdas: Vec<f64>,
    /// Total external arrival rate (sum of the traffic model's gamma).
    pub total_external: f64,
}

/// Per-node and end-to-end steady-state metrics of a stable network.
///
/// Nodes that carry no traffic report zero queue length and zero delay.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueMetrics {
    /// Mean number in system per node, `lambda_i / (mu_i - lambda_i)`.
    pub mean_queue_lengths: Vec<f64>,
    /// Mean end-to-end packet sojourn, seconds.
    pub mean_system_delay: f64,
    /// Mean sojourn per visit to each node, `1 / (mu_i - lambda_i)`, seconds.
    pub per_node_delays: Vec<f64>,
}

/// Relative residual tolerance the solved flows must meet.
const FLOW_RESIDUAL_TOL: f64 = 1e-10;

/// Solve `lambda = gamma + R^T lambda` by dense Gaussian elimination with
/// partial pivoting. Networks here are a handful of nodes, so a direct solve
/// is both exact enough and simplest.
pub fn solve_traffic_equations(traffic: &TrafficModel) -> Result<FlowSolution> {
    traffic.validate()?;
    let n = traffic.node_count();
    // Coefficient matrix A = I - R^T, right-hand side gamma.
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = if i == j { 1.0 } else { 0.0 } - traffic.routing[j][i];
        }
    }
    let mut x = traffic.external_arrivals.clone();

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-12 {
            return Err(Error::ClosedNetwork);
        }
        a.swap(col, pivot_row);
        x.swap(col, pivot_row);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= a[col][col];
        for row in 0..col {
            x[row] -= a[row][col] * x[col];
        }
    }

    // Exact solutions of an open network are non-negative; clamp pure
    // round-off noise but treat anything larger as a singular system.
    for v in &mut x {
        if *v < 0.0 {
            if *v > -1e-9 {
                *v = 0.0;
            } else {
                return Err(Error::ClosedNetwork);
            }
        }
    }

    let lambdas = x;
    let scale = lambdas.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
    for i in 0..n {
        let routed: f64 = (0..n).map(|j| traffic.routing[j][i] * lambdas[j]).sum();
        let residual = lambdas[i] - (traffic.external_arrivals[i] + routed);
        if residual.abs() > FLOW_RESIDUAL_TOL * scale {
            return Err(Error::ClosedNetwork);
        }
    }

    Ok(FlowSolution {
        total_external: traffic.external_arrivals.iter().sum(),
        lambdas,
    })
}

/// True iff every node that carries traffic has strictly more service rate
/// than arrivals. Nodes with `lambda_i = 0` never queue anything and are
/// vacuously stable regardless of their (possibly zero) allocated rate.
pub fn is_stable(flow: &FlowSolution, mus: &[f64]) -> Result<bool> {
    if mus.len() != flow.lambdas.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} service rates for {} nodes",
            mus.len(),
            flow.lambdas.len()
        )));
    }
    Ok(flow
        .lambdas
        .iter()
        .zip(mus)
        .all(|(&l, &m)| l == 0.0 || l < m))
}

/// Steady-state metrics for a stable allocation.
pub fn mean_delay(flow: &FlowSolution, mus: &[f64]) -> Result<QueueMetrics> {
    if !is_stable(flow, mus)? {
        return Err(Error::Unstable(
            "some node has arrival rate >= service rate".into(),
        ));
    }
    if flow.total_external <= 0.0 {
        return Err(Error::Degenerate("no external traffic".into()));
    }
    let mut queue_lengths = Vec::with_capacity(flow.lambdas.len());
    let mut node_delays = Vec::with_capacity(flow.lambdas.len());
    let mut total_in_system = 0.0;
    for (&l, &m) in flow.lambdas.iter().zip(mus) {
        if l == 0.0 {
            queue_lengths.push(0.0);
            node_delays.push(0.0);
        } else {
            let q = l / (m - l);
            queue_lengths.push(q);
            node_delays.push(1.0 / (m - l));
            total_in_system += q;
        }
    }
    Ok(QueueMetrics {
        mean_system_delay: total_in_system / flow.total_external,
        mean_queue_lengths: queue_lengths,
        per_node_delays: node_delays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::case_study_topology;
    use proptest::prelude::*;

    fn assert_close(actual: f64, expected: f64, rel: f64) {
        let scale = expected.abs().max(1e-300);
        assert!(
            (actual - expected).abs() <= rel * scale,
            "expected {expected}, got {actual}"
        );
    }

    #[test]
    fn case_study_flows() {
        let r = case_study_topology(2000.0, 0.1).unwrap();
        let flow = solve_traffic_equations(&r.traffic).unwrap();
        assert_close(flow.lambdas[0], 2000.0, 1e-12);
        assert_close(flow.lambdas[1], 2000.0, 1e-12);
        assert_close(flow.lambdas[2], 200.0, 1e-12);
        assert_close(flow.lambdas[3], 1800.0, 1e-12);
        assert_eq!(flow.total_external, 2000.0);
    }

    #[test]
    fn tandem_forwarding() {
        let t = TrafficModel {
            external_arrivals: vec![10.0, 0.0],
            routing: vec![vec![0.0, 1.0], vec![0.0, 0.0]],
            mean_packet_size_bits: 1.0e6,
        };
        let flow = solve_traffic_equations(&t).unwrap();
        assert_eq!(flow.lambdas, vec![10.0, 10.0]);
    }

    #[test]
    fn single_node_identity() {
        let t = TrafficModel {
            external_arrivals: vec![7.0],
            routing: vec![vec![0.0]],
            mean_packet_size_bits: 1.0e6,
        };
        let flow = solve_traffic_equations(&t).unwrap();
        assert_eq!(flow.lambdas, vec![7.0]);
    }

    #[test]
    fn feedback_loop_amplifies_flow() {
        // One node that re-enters itself with probability 1/2: lambda = 2 gamma.
        let t = TrafficModel {
            external_arrivals: vec![3.0],
            routing: vec![vec![0.5]],
            mean_packet_size_bits: 1.0e6,
        };
        let flow = solve_traffic_equations(&t).unwrap();
        assert_close(flow.lambdas[0], 6.0, 1e-12);
    }

    #[test]
    fn stability_boundary_and_overload() {
        let flow = FlowSolution {
            lambdas: vec![10.0],
            total_external: 10.0,
        };
        assert!(!is_stable(&flow, &[10.0]).unwrap());
        let flow = FlowSolution {
            lambdas: vec![5.0],
            total_external: 5.0,
        };
        assert!(!is_stable(&flow, &[4.0]).unwrap());
        assert!(is_stable(&flow, &[5.1]).unwrap());
        assert!(is_stable(&flow, &[5.0, 0.0]).is_err());
    }

    #[test]
    fn zero_flow_node_is_vacuously_stable() {
        let flow = FlowSolution {
            lambdas: vec![5.0, 0.0],
            total_external: 5.0,
        };
        assert!(is_stable(&flow, &[6.0, 0.0]).unwrap());
    }

    #[test]
    fn single_node_sojourn() {
        let flow = FlowSolution {
            lambdas: vec![50.0],
            total_external: 50.0,
        };
        let m = mean_delay(&flow, &[100.0]).unwrap();
        assert_close(m.mean_system_delay, 0.02, 1e-12);
        assert_close(m.per_node_delays[0], 0.02, 1e-12);
        assert_close(m.mean_queue_lengths[0], 1.0, 1e-12);
    }

    #[test]
    fn tandem_sojourn_adds_stages() {
        let flow = FlowSolution {
            lambdas: vec![10.0, 10.0],
            total_external: 10.0,
        };
        let m = mean_delay(&flow, &[20.0, 20.0]).unwrap();
        assert_close(m.mean_system_delay, 0.2, 1e-12);
    }

    #[test]
    fn unstable_input_is_an_error() {
        let flow = FlowSolution {
            lambdas: vec![5.0],
            total_external: 5.0,
        };
        assert!(matches!(mean_delay(&flow, &[5.0]), Err(Error::Unstable(_))));
    }

    #[test]
    fn closed_network_is_detected() {
        // Perfect two-cycle: I - R^T is singular. Rejected before the solve
        // by the open-network validation; either way it must not "succeed".
        let t = TrafficModel {
            external_arrivals: vec![1.0, 0.0],
            routing: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            mean_packet_size_bits: 1.0e6,
        };
        assert!(solve_traffic_equations(&t).is_err());
    }

    proptest! {
        #[test]
        fn flow_conservation_at_the_serving_gateway(
            lambda in 1.0e-3..1.0e5f64,
            q in 0.0..=1.0f64,
        ) {
            let r = case_study_topology(lambda, q).unwrap();
            let flow = solve_traffic_equations(&r.traffic).unwrap();
            let err = (flow.lambdas[2] + flow.lambdas[3] - flow.lambdas[1]).abs();
            prop_assert!(err <= 1e-10 * lambda.max(1.0));
        }

        #[test]
        fn delay_strictly_decreases_in_any_service_rate(
            lambda in 1.0..100.0f64,
            q in 0.01..0.99f64,
            headroom in 1.01..4.0f64,
            node in 0usize..4,
            bump in 0.1..10.0f64,
        ) {
            let r = case_study_topology(lambda, q).unwrap();
            let flow = solve_traffic_equations(&r.traffic).unwrap();
            let mut mus: Vec<f64> = flow.lambdas.iter().map(|l| l * headroom + 1.0).collect();
            let before = mean_delay(&flow, &mus).unwrap().mean_system_delay;
            mus[node] += bump;
            let after = mean_delay(&flow, &mus).unwrap().mean_system_delay;
            prop_assert!(after < before);
        }

        #[test]
        fn single_node_delay_is_reciprocal_headroom(
            lambda in 0.1..100.0f64,
            headroom in 0.1..100.0f64,
        ) {
            let flow = FlowSolution { lambdas: vec![lambda], total_external: lambda };
            let m = mean_delay(&flow, &[lambda + headroom]).unwrap();
            let expected = 1.0 / headroom;
            prop_assert!((m.mean_system_delay - expected).abs() <= 1e-9 * expected);
        }
    }
}
