//! Command-line front end: scenario ingestion, subcommand dispatch, and CSV
//! emission. Exit codes: 0 success, 2 usage (bad arguments, missing files),
//! 3 scenario validation failure, 4 infeasible (unstable or unsatisfiable).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use netslice::capacity::{capacity_sweep, optimal_capacity, CapacityPlan};
use netslice::embedding::{embed_max, EmbedMode};
use netslice::error::Error;
use netslice::model::{case_study_topology, PriceVector, VnRequest};
use netslice::pricing::{best_response, evaluate_prices, maximize_revenue};
use netslice::queueing::{is_stable, mean_delay, solve_traffic_equations, FlowSolution};
use netslice::report::{fmt_sig, write_csv};
use netslice::scenario::{LoadedScenario, Scenario, ScenarioError};
use netslice::simulator::{run_two_time_scale, EpochConfig};

/// Default latency sweep, seconds. Covers both reference SLAs (10 and
/// 20 ms) and spans loose-to-tight bounds.
const DEFAULT_T_SWEEP: [f64; 10] = [
    0.001, 0.002, 0.005, 0.010, 0.020, 0.050, 0.100, 0.200, 0.500, 1.000,
];

#[derive(Parser)]
#[command(
    name = "netslice",
    version,
    about = "Network-slice capacity sizing, embedding, pricing, and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Greedy,
}

impl From<ModeArg> for EmbedMode {
    fn from(value: ModeArg) -> Self {
        match value {
            ModeArg::Exact => EmbedMode::Exact,
            ModeArg::Greedy => EmbedMode::Greedy,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve each slice's traffic equations; slices with fully pinned
    /// capacities also get stability and mean-delay figures
    Analyze {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Size each slice at its SLA latency under the scenario prices
    OptimizeCapacity {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Size each slice across a latency sweep
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated latencies in seconds, strictly ascending
        #[arg(long, value_delimiter = ',')]
        t_list: Option<Vec<f64>>,
    },
    /// Embed every slice onto the substrate and report residuals
    Embed {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
    },
    /// Evaluate the scenario's price grid and pick the revenue maximizer
    PriceGame {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the two-time-scale simulation from the scenario's schedule
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rebuild the two reference gateway-chain studies and emit their
    /// capacity-sweep and price-comparison tables
    ReproduceCaseStudy {
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated latencies in seconds for the sweep table
        #[arg(long, value_delimiter = ',')]
        t_list: Option<Vec<f64>>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(err: ScenarioError) -> Self {
        let code = match err {
            ScenarioError::Io(_) => 2,
            ScenarioError::Parse(_) | ScenarioError::Invalid(_) => 3,
        };
        Failure::new(code, err.to_string())
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Unstable(_) | Error::Degenerate(_) | Error::ClosedNetwork => 4,
            Error::TooLarge(_) => 2,
            _ => 3,
        };
        Failure::new(code, err.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::new(2, format!("io error: {err}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("netslice: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn load(path: &Path) -> Result<LoadedScenario, Failure> {
    Ok(Scenario::from_file(path)?.to_model()?)
}

fn ensure_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Analyze { scenario, out } => analyze(&load(&scenario)?, &out),
        Command::OptimizeCapacity { scenario, out } => optimize_capacity(&load(&scenario)?, &out),
        Command::Sweep {
            scenario,
            out,
            t_list,
        } => sweep(&load(&scenario)?, &out, t_list.as_deref()),
        Command::Embed {
            scenario,
            out,
            mode,
        } => embed(&load(&scenario)?, &out, mode.into()),
        Command::PriceGame { scenario, out } => price_game(&load(&scenario)?, &out),
        Command::Simulate {
            scenario,
            out,
            seed,
        } => simulate(&load(&scenario)?, &out, seed),
        Command::ReproduceCaseStudy { out, t_list } => {
            reproduce_case_study(&out, t_list.as_deref())
        }
    }
}

fn check_t_list(t_values: &[f64]) -> Result<(), Failure> {
    let ok = !t_values.is_empty()
        && t_values.iter().all(|&t| t > 0.0 && t.is_finite())
        && t_values.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(Failure::new(
            2,
            "t-list must be strictly ascending positive seconds",
        ))
    }
}

fn flows_for(requests: &[VnRequest]) -> Result<Vec<(VnRequest, FlowSolution)>, Failure> {
    requests
        .iter()
        .map(|r| Ok((r.clone(), solve_traffic_equations(&r.traffic)?)))
        .collect()
}

fn analyze(loaded: &LoadedScenario, out: &Path) -> Result<(), Failure> {
    ensure_out(out)?;
    let mut lambda_rows = Vec::new();
    let mut delay_rows = Vec::new();
    for (request, flow) in flows_for(&loaded.all_requests())? {
        for (i, node) in request.virtual_nodes.iter().enumerate() {
            lambda_rows.push(vec![
                request.id.clone(),
                i.to_string(),
                node.kind.label().to_string(),
                fmt_sig(flow.lambdas[i]),
            ]);
        }
        let fixed: Option<Vec<f64>> = request
            .virtual_nodes
            .iter()
            .map(|n| n.fixed_capacity)
            .collect();
        if let Some(mus) = fixed {
            let stable = is_stable(&flow, &mus)?;
            let delay = if stable {
                mean_delay(&flow, &mus)?.mean_system_delay
            } else {
                f64::INFINITY
            };
            delay_rows.push(vec![
                request.id.clone(),
                u8::from(stable).to_string(),
                fmt_sig(delay),
            ]);
        }
    }
    let lambda_path = out.join("analyze_lambda.csv");
    write_csv(
        &lambda_path,
        &["vn_id", "node_index", "node_kind", "lambda"],
        lambda_rows,
    )?;
    let delay_path = out.join("analyze_delay.csv");
    write_csv(
        &delay_path,
        &["vn_id", "stable", "mean_system_delay_seconds"],
        delay_rows,
    )?;
    println!(
        "wrote {} and {}",
        lambda_path.display(),
        delay_path.display()
    );
    Ok(())
}

fn plan_rows(
    t: f64,
    flow: &FlowSolution,
    prices: &PriceVector,
    plan: &CapacityPlan,
) -> Vec<Vec<String>> {
    (0..flow.lambdas.len())
        .map(|i| {
            vec![
                fmt_sig(t),
                i.to_string(),
                fmt_sig(flow.lambdas[i]),
                fmt_sig(plan.mus[i]),
                fmt_sig(prices.prices[i]),
                fmt_sig(plan.per_node_cost[i]),
                fmt_sig(plan.total_cost),
                fmt_sig(plan.kkt_multiplier),
            ]
        })
        .collect()
}

const PLAN_HEADER: [&str; 8] = [
    "T_seconds",
    "node_id",
    "lambda",
    "mu_opt",
    "price",
    "node_cost",
    "total_cost",
    "alpha",
];

fn optimize_capacity(loaded: &LoadedScenario, out: &Path) -> Result<(), Failure> {
    ensure_out(out)?;
    for (request, flow) in flows_for(&loaded.all_requests())? {
        let prices = loaded.prices.prefix(request.node_count())?;
        let plan = optimal_capacity(&flow, &prices, request.sla_latency)?;
        let path = out.join(format!("optimize_capacity_{}.csv", request.id));
        write_csv(
            &path,
            &PLAN_HEADER,
            plan_rows(request.sla_latency, &flow, &prices, &plan),
        )?;
        println!(
            "vn {}: total cost {} at T = {} s -> {}",
            request.id,
            fmt_sig(plan.total_cost),
            fmt_sig(request.sla_latency),
            path.display()
        );
    }
    Ok(())
}

fn sweep(loaded: &LoadedScenario, out: &Path, t_list: Option<&[f64]>) -> Result<(), Failure> {
    let t_values: Vec<f64> = t_list
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| DEFAULT_T_SWEEP.to_vec());
    check_t_list(&t_values)?;
    ensure_out(out)?;
    for (request, flow) in flows_for(&loaded.all_requests())? {
        let prices = loaded.prices.prefix(request.node_count())?;
        let plans = capacity_sweep(&flow, &prices, &t_values)?;
        let rows = t_values
            .iter()
            .zip(&plans)
            .flat_map(|(&t, plan)| plan_rows(t, &flow, &prices, plan));
        let path = out.join(format!("sweep_{}.csv", request.id));
        write_csv(&path, &PLAN_HEADER, rows)?;
        println!(
            "vn {}: {} latencies -> {}",
            request.id,
            t_values.len(),
            path.display()
        );
    }
    Ok(())
}

fn embed(loaded: &LoadedScenario, out: &Path, mode: EmbedMode) -> Result<(), Failure> {
    ensure_out(out)?;
    let mut sized = Vec::new();
    for request in loaded.all_requests() {
        let plan = best_response(&request, &loaded.prices)?;
        sized.push((request, plan));
    }
    let outcome = embed_max(&loaded.substrate, &sized, mode, &loaded.compat)?;
    println!("admitted: {}", outcome.admitted.join(" "));
    for (vn_id, reason) in &outcome.rejected {
        println!("rejected: {vn_id} ({reason})");
    }
    for (vn_id, embedding) in &outcome.state.active {
        let nodes: Vec<String> = embedding
            .node_map
            .iter()
            .enumerate()
            .map(|(i, sub)| format!("v{i}->{sub}"))
            .collect();
        println!("mapping {vn_id}: {}", nodes.join(" "));
        for (k, path) in embedding.link_map.iter().enumerate() {
            println!("  link {k}: {}", path.join("-"));
        }
    }
    let mut rows = Vec::new();
    for node in &outcome.state.substrate.nodes {
        rows.push(vec![
            "node".to_string(),
            node.id.clone(),
            fmt_sig(node.capacity),
            fmt_sig(node.residual),
        ]);
    }
    for link in &outcome.state.substrate.links {
        rows.push(vec![
            "link".to_string(),
            format!("{}--{}", link.a, link.b),
            fmt_sig(link.bandwidth),
            fmt_sig(link.residual_bandwidth),
        ]);
    }
    let path = out.join("residuals.csv");
    write_csv(&path, &["entity", "id", "capacity", "residual"], rows)?;
    println!("wrote {}", path.display());
    if outcome.admitted.is_empty() && !sized.is_empty() {
        return Err(Failure::new(4, "no slice could be embedded"));
    }
    Ok(())
}

fn price_game(loaded: &LoadedScenario, out: &Path) -> Result<(), Failure> {
    ensure_out(out)?;
    let requests = loaded.all_requests();
    let best = maximize_revenue(
        &loaded.substrate,
        &requests,
        &loaded.portfolios,
        &loaded.compat,
    )?;
    let mut rows = Vec::new();
    for (pi, prices) in loaded.portfolios.iter().enumerate() {
        let outcome = evaluate_prices(&loaded.substrate, &requests, prices, &loaded.compat)?;
        for request in &requests {
            let plan = &outcome.demands[&request.id];
            let participant = outcome.participants.contains(&request.id);
            for i in 0..request.node_count() {
                rows.push(vec![
                    (pi + 1).to_string(),
                    request.id.clone(),
                    i.to_string(),
                    fmt_sig(plan.mus[i]),
                    fmt_sig(plan.per_node_cost[i]),
                    u8::from(participant).to_string(),
                    fmt_sig(outcome.revenue),
                ]);
            }
        }
    }
    let path = out.join("price_game.csv");
    write_csv(
        &path,
        &[
            "portfolio_id",
            "vn_id",
            "node_id",
            "mu",
            "node_cost",
            "participant_flag",
            "revenue",
        ],
        rows,
    )?;
    let chosen = loaded
        .portfolios
        .iter()
        .position(|p| *p == best.prices)
        .map(|i| i + 1)
        .unwrap_or(0);
    println!(
        "best portfolio: {} (revenue {}, participants: {})",
        chosen,
        fmt_sig(best.revenue),
        best.participants
            .iter()
            .cloned()
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn simulate(loaded: &LoadedScenario, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    ensure_out(out)?;
    let Some(spec) = &loaded.schedule else {
        return Err(Failure::new(3, "scenario has no schedule section"));
    };
    let mut config = EpochConfig::new(
        spec.epoch_length,
        spec.epochs,
        spec.events.clone(),
        seed.unwrap_or(loaded.seed),
    );
    if let Some(batches) = spec.batches {
        config.batches = batches;
    }
    let report = run_two_time_scale(
        &loaded.substrate,
        &loaded.prices,
        &config,
        &loaded.initial_requests(),
        &loaded.compat,
    )?;

    let log_path = out.join("admission_log.csv");
    write_csv(
        &log_path,
        &["time", "vn_id", "decision", "reason"],
        report.admission_log.iter().map(|r| {
            vec![
                fmt_sig(r.time),
                r.vn_id.clone(),
                r.decision.clone(),
                r.reason.clone(),
            ]
        }),
    )?;
    let util_path = out.join("utilization.csv");
    write_csv(
        &util_path,
        &["epoch", "node_id", "utilization"],
        report.epoch_utilization.iter().flat_map(|epoch| {
            epoch.per_node.iter().map(|u| {
                vec![
                    epoch.epoch.to_string(),
                    u.node_id.clone(),
                    fmt_sig(u.utilization),
                ]
            })
        }),
    )?;
    let delay_path = out.join("delays.csv");
    write_csv(
        &delay_path,
        &[
            "vn_id",
            "analytic_delay_seconds",
            "measured_delay_seconds",
            "ci_half_width_seconds",
            "completed_packets",
        ],
        report.per_vn.iter().map(|vn| {
            vec![
                vn.vn_id.clone(),
                fmt_sig(vn.analytic_delay),
                fmt_sig(vn.measured_delay),
                fmt_sig(vn.ci_half_width),
                vn.completed_packets.to_string(),
            ]
        }),
    )?;
    for vn in &report.per_vn {
        println!(
            "vn {}: analytic {} s, measured {} s (+/- {}), {} packets",
            vn.vn_id,
            fmt_sig(vn.analytic_delay),
            fmt_sig(vn.measured_delay),
            fmt_sig(vn.ci_half_width),
            vn.completed_packets
        );
    }
    println!(
        "wrote {}, {}, {}",
        log_path.display(),
        util_path.display(),
        delay_path.display()
    );
    Ok(())
}

fn reproduce_case_study(out: &Path, t_list: Option<&[f64]>) -> Result<(), Failure> {
    let t_values: Vec<f64> = t_list
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| DEFAULT_T_SWEEP.to_vec());
    check_t_list(&t_values)?;
    ensure_out(out)?;
    let portfolio_1 = PriceVector::new(vec![0.8, 0.2, 0.05, 0.1]);
    let portfolio_2 = PriceVector::new(vec![0.5, 0.15, 0.1, 0.15]);

    let mut high_volume = case_study_topology(2000.0, 0.1)?;
    high_volume.id = "high-volume".into();
    high_volume.sla_latency = 0.010;
    let mut monitoring = case_study_topology(50.0, 0.5)?;
    monitoring.id = "monitoring".into();
    monitoring.sla_latency = 0.020;

    // Capacity-versus-latency table under portfolio 1.
    let mut fig4_rows = Vec::new();
    for request in [&high_volume, &monitoring] {
        let flow = solve_traffic_equations(&request.traffic)?;
        let plans = capacity_sweep(&flow, &portfolio_1, &t_values)?;
        for (&t, plan) in t_values.iter().zip(&plans) {
            for row in plan_rows(t, &flow, &portfolio_1, plan) {
                let mut full = vec![request.id.clone()];
                full.extend(row);
                fig4_rows.push(full);
            }
        }
    }
    let fig4_path = out.join("fig4_capacity_vs_latency.csv");
    let mut fig4_header = vec!["scenario"];
    fig4_header.extend(PLAN_HEADER);
    write_csv(&fig4_path, &fig4_header, fig4_rows)?;

    // Per-node costs at each slice's SLA under both portfolios.
    let mut fig5_rows = Vec::new();
    for (pi, prices) in [&portfolio_1, &portfolio_2].into_iter().enumerate() {
        for request in [&high_volume, &monitoring] {
            let flow = solve_traffic_equations(&request.traffic)?;
            let plan = optimal_capacity(&flow, prices, request.sla_latency)?;
            for i in 0..request.node_count() {
                fig5_rows.push(vec![
                    (pi + 1).to_string(),
                    request.id.clone(),
                    i.to_string(),
                    fmt_sig(prices.prices[i]),
                    fmt_sig(plan.mus[i]),
                    fmt_sig(plan.per_node_cost[i]),
                    fmt_sig(plan.total_cost),
                ]);
            }
        }
    }
    let fig5_path = out.join("fig5_cost_per_node.csv");
    write_csv(
        &fig5_path,
        &[
            "portfolio_id",
            "vn_id",
            "node_id",
            "price",
            "mu",
            "node_cost",
            "total_cost",
        ],
        fig5_rows,
    )?;
    println!("wrote {} and {}", fig4_path.display(), fig5_path.display());
    Ok(())
}
