mod bounds_cmd;
mod config;
mod output;

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{BiasMode, CurveKind, Format, RunConfig, TransportKind};
use output::{write_csv, write_json, PartyView};
use qkdd_core::optimizer::{
    key_vs_bias, min_n_vs_eps, optbias_vs_n, optimize, optimize_fixed_px, rate_vs_n, OptimizeError, OptimizedPlan,
};
use qkdd_core::protocol::{
    run_party, run_session_with_fault, simulate_quantum_phase, tcp_accept, tcp_connect, FaultyLink, Link,
    PartyInput, ProtocolError, Records, Role, SessionParams, Step,
};

#[derive(Parser)]
#[command(name = "qkdd", version, about = "Finite-key BB84 post-processing: planning, simulation and bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the Alice, Bob and channel seeds (seed, seed+1, seed+2).
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    transport: Option<TransportKind>,
    /// Bob's listening address in tcp mode.
    #[arg(long)]
    listen: Option<String>,
    /// Address Alice connects to in tcp mode.
    #[arg(long)]
    connect: Option<String>,
    #[arg(long, value_enum)]
    role: Option<RoleArg>,
    /// Use this plan JSON instead of optimizing.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Write the frame transcript here.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum RoleArg {
    Alice,
    Bob,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    common: Common,
    /// Overrides `curve.kind` from the configuration.
    #[arg(long, value_enum)]
    kind: Option<CurveKind>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize bias, deviations and key allocations for a configuration.
    Optimize(Common),
    /// Plan and run a session in memory, or one party over TCP.
    Simulate(SimulateArgs),
    /// Tabulate planner curves.
    Curve(CurveArgs),
    /// Evaluate individual bounds.
    Bounds(bounds_cmd::BoundsArgs),
}

/// Failure classes with distinct exit codes.
#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Infeasible(String),
    Abort { step: Option<Step>, reason: String },
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Config(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Abort { .. } => 4,
        }
    }
}

impl From<OptimizeError> for Failure {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Infeasible(s) => Failure::Infeasible(s),
            OptimizeError::Domain(_) => Failure::Config(e.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("QKDD_LOG")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimize(c) => cmd_optimize(c),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Bounds(a) => bounds_cmd::run(a).map_err(Failure::Config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("configuration error: {e:#}"),
                Failure::Infeasible(s) => eprintln!("infeasible: {s}"),
                Failure::Abort { step, reason } => {
                    let at = step.map_or("configuration", |s| s.label());
                    eprintln!("aborted at {at}: {reason}");
                }
                Failure::Other(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(&common.config).map_err(Failure::Config)?;
    if let Some(seed) = common.seed {
        cfg.apply_seed(seed);
    }
    if common.out.is_some() {
        cfg.output.out = common.out.clone();
    }
    if common.format.is_some() {
        cfg.output.format = common.format;
    }
    Ok(cfg)
}

fn json_only(cfg: &RunConfig) -> Outcome {
    match cfg.output.format {
        Some(Format::Csv) => Err(Failure::Config(anyhow!("this command writes JSON only"))),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct OptimizeReport<'a> {
    plan: &'a OptimizedPlan,
    /// Finite-key length over the asymptotic `n [1 - H(e_bx) - H(e_bz)]`.
    finite_over_asymptotic: f64,
}

fn plan_for(cfg: &RunConfig) -> Result<OptimizedPlan, Failure> {
    if let Some(path) = &cfg.plan.plan_file {
        return read_plan(path);
    }
    let inputs = cfg.plan_inputs();
    Ok(match cfg.plan.bias {
        BiasMode::Optimize => optimize(&inputs)?,
        BiasMode::Fixed => optimize_fixed_px(&inputs, cfg.session.p_x)?,
    })
}

fn read_plan(path: &Path) -> Result<OptimizedPlan, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Config)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Config)?;
    // Accept both a bare plan and the `optimize` report wrapping one.
    let plan = value.get("plan").cloned().unwrap_or(value);
    serde_json::from_value(plan)
        .with_context(|| format!("plan in {}", path.display()))
        .map_err(Failure::Config)
}

fn cmd_optimize(common: Common) -> Outcome {
    let cfg = load(&common)?;
    json_only(&cfg)?;
    let plan = plan_for(&cfg)?;
    let report = OptimizeReport {
        plan: &plan,
        finite_over_asymptotic: plan.net_key as f64 / plan.asymptotic_key,
    };
    eprintln!(
        "n = {}  p_x = {:.4}  q_x = {:.5}  theta_x = {:.4}%  theta_z = {:.4}%",
        plan.inputs.n,
        plan.p_x,
        plan.q_x,
        100.0 * plan.theta_x,
        100.0 * plan.theta_z
    );
    eprintln!(
        "NR = {}  l = {}  eps_final = {:.4e}  zeta = {:.5e}",
        plan.net_key,
        plan.l,
        plan.eps_final.linear(),
        plan.zeta
    );
    eprintln!(
        "asymptotic key = {:.0}  finite/asymptotic = {:.4}",
        plan.asymptotic_key, report.finite_over_asymptotic
    );
    write_json(cfg.output.out.as_deref(), &report)?;
    Ok(())
}

/// Session parameters actually run: an optimized bias replaces the
/// configured one.
fn effective_params(cfg: &RunConfig, plan: &OptimizedPlan) -> SessionParams {
    let mut p = cfg.session.clone();
    if cfg.plan.bias == BiasMode::Optimize || cfg.plan.plan_file.is_some() {
        p.p_x = plan.p_x;
    }
    p
}

fn cmd_simulate(args: SimulateArgs) -> Outcome {
    let mut cfg = load(&args.common)?;
    json_only(&cfg)?;
    if let Some(t) = args.transport {
        cfg.transport.kind = t;
    }
    if args.plan.is_some() {
        cfg.plan.plan_file = args.plan.clone();
    }
    if args.transcript.is_some() {
        cfg.output.transcript = args.transcript.clone();
    }
    let plan = plan_for(&cfg)?;
    let params = effective_params(&cfg, &plan);
    match cfg.transport.kind {
        TransportKind::Inmem => simulate_inmem(&cfg, &params, &plan),
        TransportKind::Tcp => simulate_tcp(&cfg, &args, params, plan),
    }
}

fn protocol_failure(e: ProtocolError) -> Failure {
    match e {
        ProtocolError::Config(s) => Failure::Config(anyhow!(s)),
        other => Failure::Abort {
            step: other.step(),
            reason: other.to_string(),
        },
    }
}

#[derive(Serialize)]
struct SimulateReport<'a, R: Serialize> {
    params: &'a SessionParams,
    plan: &'a OptimizedPlan,
    #[serde(flatten)]
    result: R,
}

fn simulate_inmem(cfg: &RunConfig, params: &SessionParams, plan: &OptimizedPlan) -> Outcome {
    let result = run_session_with_fault(params, plan, cfg.fault).map_err(protocol_failure)?;
    if let Some(path) = &cfg.output.transcript {
        write_json(Some(path), &result.transcript)?;
    }
    let abort = result.abort.clone();
    write_json(
        cfg.output.out.as_deref(),
        &SimulateReport {
            params,
            plan,
            result: serde_json::json!({ "session": &result }),
        },
    )?;
    match abort {
        Some(a) => Err(Failure::Abort {
            step: a.step,
            reason: a.reason,
        }),
        None => {
            eprintln!(
                "l = {}  NR = {}  eps = {:.4e}  keys match: {}",
                result.l.unwrap_or(0),
                result.net_key.unwrap_or(0),
                result.epsilon.map_or(f64::NAN, |e| e.linear()),
                result.keys_match
            );
            Ok(())
        }
    }
}

fn simulate_tcp(cfg: &RunConfig, args: &SimulateArgs, params: SessionParams, plan: OptimizedPlan) -> Outcome {
    let role = match args.role {
        Some(RoleArg::Alice) => Role::Alice,
        Some(RoleArg::Bob) => Role::Bob,
        None => return Err(Failure::Config(anyhow!("--role is required with the tcp transport"))),
    };
    let address = match role {
        Role::Alice => args.connect.clone(),
        Role::Bob => args.listen.clone(),
    }
    .or_else(|| cfg.transport.address.clone())
    .ok_or_else(|| Failure::Config(anyhow!("no address: pass --listen (bob) or --connect (alice)")))?;

    let (alice, bob) = simulate_quantum_phase(&params).map_err(protocol_failure)?;
    let records = match role {
        Role::Alice => Records::Alice(alice),
        Role::Bob => Records::Bob(bob),
    };
    let input = PartyInput {
        params: params.clone(),
        plan: plan.clone(),
        records,
    };
    let link = match role {
        Role::Bob => {
            let listener = TcpListener::bind(&address).with_context(|| format!("binding {address}"));
            let listener = listener.map_err(Failure::Other)?;
            log::info!("bob listening on {}", listener.local_addr()?);
            tcp_accept(&listener).map_err(|e| Failure::Other(e.into()))?
        }
        Role::Alice => {
            let timeout = Duration::from_secs_f64(cfg.transport.connect_timeout_s);
            tcp_connect(address.as_str(), timeout)
                .with_context(|| format!("connecting to {address}"))
                .map_err(Failure::Other)?
        }
    };
    let link: Box<dyn Link + Send> = match cfg.fault {
        Some(f) => Box::new(FaultyLink::new(link, f)),
        None => Box::new(link),
    };
    let outcome = run_party(&input, link);
    let view = PartyView::from(&outcome);
    if let Some(path) = &cfg.output.transcript {
        write_json(Some(path), &outcome.transcript)?;
    }
    write_json(
        cfg.output.out.as_deref(),
        &SimulateReport {
            params: &params,
            plan: &plan,
            result: serde_json::json!({ "party": &view }),
        },
    )?;
    match outcome.error {
        Some(e) => Err(protocol_failure(e)),
        None => Ok(()),
    }
}

fn cmd_curve(args: CurveArgs) -> Outcome {
    let cfg = load(&args.common)?;
    let mut curve = cfg
        .curve
        .clone()
        .ok_or_else(|| Failure::Config(anyhow!("configuration has no `curve` section")))?;
    if let Some(k) = args.kind {
        curve.kind = k;
    }
    let base = cfg.plan_inputs();
    let out = cfg.output.out.as_deref();
    let csv = cfg.output.format == Some(Format::Csv);
    macro_rules! emit {
        ($rows:expr) => {{
            let rows = $rows?;
            if csv {
                write_csv(out, &rows)?
            } else {
                write_json(out, &rows)?
            }
        }};
    }
    match curve.kind {
        CurveKind::RateVsN => emit!(rate_vs_n(&curve.ns, &curve.epsilons, &base)),
        CurveKind::MinNVsEps => emit!(min_n_vs_eps(&curve.epsilons, &base)),
        CurveKind::KeyVsBias => emit!(key_vs_bias(&curve.qs, &base)),
        CurveKind::OptbiasVsN => emit!(optbias_vs_n(&curve.ns, &base)),
    }
    Ok(())
}
