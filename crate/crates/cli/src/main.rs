mod output;
mod spec;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use sis_bounds::analysis::{self, ComparisonRow, MixingBound, ScanOptions};
use sis_bounds::chain::{exact_moments, tv_from_stationary, ChainDistribution, ExactChain, MixingOutcome, NetworkState};
use sis_bounds::graph::{self, Graph};
use sis_bounds::montecarlo::{self, InitialCondition, McConfig, DEFAULT_SEED};
use sis_bounds::{BoundKind, BoundMatrix, EpidemicParams};

use output::{sig6, sink, write_json, Format};
use spec::parse_graph;

#[derive(Parser)]
#[command(name = "sisb", version, about = "Spectral bounds and exact checks for the discrete-time SIS epidemic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated graph as an edge list.
    Gen(GenArgs),
    /// Spectral radii of M, M', M'' and the sign condition for one graph.
    Analyze(AnalyzeArgs),
    /// Run the exact chain from all-infected and report the mixing time.
    Exact(ExactArgs),
    /// Monte Carlo infected-fraction curve.
    Mc(McArgs),
    /// Check every bound against the exact chain; exits 1 on a violation.
    Verify(VerifyArgs),
    /// Radii over a grid of infection probabilities.
    Scan(ScanArgs),
    /// Export a bound matrix as `row col value` triplets under a `dim nnz` header.
    Matrix(MatrixArgs),
}

#[derive(Args)]
struct GraphArg {
    /// star6 | star:6 | cycle:n | path:n | clique:n | er:n:p:seed |
    /// ws:n:k:p:seed | spider:arms:len | file:path
    #[arg(long)]
    graph: String,
}

#[derive(Args)]
struct ParamArgs {
    /// Infection probability per infected neighbour.
    #[arg(long)]
    beta: f64,
    /// Recovery probability.
    #[arg(long)]
    delta: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<EpidemicParams> {
        Ok(EpidemicParams::new(self.beta, self.delta)?)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Star,
    Cycle,
    Path,
    Clique,
    Er,
    Ws,
    Spider,
}

#[derive(Args)]
struct GenArgs {
    kind: GenKind,
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability (er).
    #[arg(long)]
    p: Option<f64>,
    /// Lattice degree (ws).
    #[arg(long)]
    k: Option<usize>,
    /// Rewiring probability (ws).
    #[arg(long)]
    rewire: Option<f64>,
    #[arg(long)]
    arms: Option<usize>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    params: ParamArgs,
    /// Steps over which the sign condition is checked.
    #[arg(long, default_value_t = 1000)]
    horizon: usize,
    /// Also certify a mixing-time bound at this accuracy.
    #[arg(long)]
    eps: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long = "t-max", default_value_t = 10_000)]
    t_max: usize,
    /// Largest node count accepted by the exact chain.
    #[arg(long = "state-cap", default_value_t = sis_bounds::chain::DEFAULT_STATE_CAP)]
    state_cap: usize,
    /// Write the final distribution as `state_bitmask,probability`.
    #[arg(long = "dist-out")]
    dist_out: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    trajectories: usize,
    #[arg(long = "t-max", default_value_t = 500)]
    t_max: usize,
    /// all | node:i | nodes:i,j,...
    #[arg(long, default_value = "all")]
    init: String,
    /// One draw per infected neighbour instead of one per node.
    #[arg(long = "per-edge")]
    per_edge: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long = "T", default_value_t = 30)]
    t: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long)]
    delta: f64,
    /// Increasing, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    betas: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    horizon: usize,
    /// Bisection tolerance for crossings; 0 disables refinement.
    #[arg(long = "refine-tol", default_value_t = 1e-4)]
    refine_tol: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixKind {
    M,
    Mp,
    Mpp,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum)]
    kind: MatrixKind,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnalyzeReport {
    row: ComparisonRow,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    mixing: Option<MixingBound>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExactReport {
    graph: String,
    params: EpidemicParams,
    eps: f64,
    mixing_time: MixingOutcome,
    /// Distance to the absorbing state at `t = 0, 1, ...`.
    tv: Vec<f64>,
    expected_infected: Vec<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Matrix(a) => cmd_matrix(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.with_context(|| format!("--{flag} is required for this generator"))
}

fn cmd_gen(a: GenArgs) -> Result<ExitCode> {
    let g: Graph = match a.kind {
        GenKind::Star => graph::star(need(a.n, "n")?)?,
        GenKind::Cycle => graph::cycle(need(a.n, "n")?)?,
        GenKind::Path => graph::path(need(a.n, "n")?)?,
        GenKind::Clique => graph::clique(need(a.n, "n")?)?,
        GenKind::Er => graph::erdos_renyi(need(a.n, "n")?, need(a.p, "p")?, a.seed)?,
        GenKind::Ws => graph::watts_strogatz(need(a.n, "n")?, need(a.k, "k")?, need(a.rewire, "rewire")?, a.seed)?,
        GenKind::Spider => graph::spider(need(a.arms, "arms")?, need(a.length, "length")?)?,
    };
    let mut w = sink(a.out.as_deref())?;
    g.write_edge_list(&mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<ExitCode> {
    let ng = parse_graph(&a.graph.graph)?;
    let params = a.params.params()?;
    let row = analysis::table_row(&ng.graph, &ng.label, params, a.horizon)?;
    let mixing = match a.eps {
        Some(eps) => Some(analysis::mixing_bound(&ng.graph, params, eps)?),
        None => None,
    };
    let mut w = sink(a.out.out.as_deref())?;
    match a.out.format {
        Format::Json => write_json(
            &mut w,
            &AnalyzeReport {
                row,
                eps: a.eps,
                mixing,
            },
        )?,
        Format::Csv => {
            write!(w, "graph,n,edges,beta,delta,lambda_max,beta_lambda_over_delta,rho_m,rho_mp,cond,rho_mpp")?;
            if mixing.is_some() {
                write!(w, ",mixing_bound")?;
            }
            writeln!(w)?;
            write!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                row.graph,
                row.n,
                row.edges,
                sig6(row.params.beta()),
                sig6(row.params.delta()),
                sig6(row.lambda_max),
                sig6(row.effective_rate()),
                sig6(row.rho_m),
                sig6(row.rho_m_prime),
                row.sign_condition.symbol(),
                sig6(row.rho_m_double_prime),
            )?;
            if let Some(m) = &mixing {
                match m.bound() {
                    Some(b) => write!(w, ",{}", sig6(b))?,
                    None => write!(w, ",none")?,
                }
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_exact(a: ExactArgs) -> Result<ExitCode> {
    let ng = parse_graph(&a.graph.graph)?;
    let params = a.params.params()?;
    if !(a.eps > 0.0 && a.eps < 1.0) {
        bail!("--eps must lie in (0, 1)");
    }
    let g = &ng.graph;
    let n = g.node_count();
    let chain = ExactChain::with_cap(g, params, a.state_cap)?;
    let mut dist = ChainDistribution::point_mass(n, NetworkState::all_infected(n))?;
    let mut tv = Vec::new();
    let mut expected = Vec::new();
    let mut outcome = MixingOutcome::Exceeded(a.t_max);
    for t in 0..=a.t_max {
        let d = tv_from_stationary(&dist);
        tv.push(d);
        expected.push(exact_moments(&dist, g)?.total_infected());
        if d <= a.eps {
            outcome = MixingOutcome::Reached(t);
            break;
        }
        if t < a.t_max {
            dist = chain.step(&dist)?;
        }
    }
    if let Some(path) = &a.dist_out {
        dist.write_csv(sink(Some(path))?)?;
    }
    match outcome {
        MixingOutcome::Reached(t) => eprintln!("t_mix({}) = {t}", a.eps),
        MixingOutcome::Exceeded(t) => eprintln!("t_mix({}) > {t}", a.eps),
    }
    let mut w = sink(a.out.out.as_deref())?;
    match a.out.format {
        Format::Json => write_json(
            &mut w,
            &ExactReport {
                graph: ng.label,
                params,
                eps: a.eps,
                mixing_time: outcome,
                tv,
                expected_infected: expected,
            },
        )?,
        Format::Csv => {
            writeln!(w, "t,tv,expected_infected")?;
            for (t, (d, e)) in tv.iter().zip(&expected).enumerate() {
                writeln!(w, "{t},{},{}", sig6(*d), sig6(*e))?;
            }
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn parse_init(s: &str) -> Result<InitialCondition> {
    if s == "all" {
        return Ok(InitialCondition::AllInfected);
    }
    if let Some(i) = s.strip_prefix("node:") {
        return Ok(InitialCondition::Single(i.parse().context("bad node index")?));
    }
    if let Some(list) = s.strip_prefix("nodes:") {
        let nodes = list
            .split(',')
            .map(|v| v.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .context("bad node list")?;
        return Ok(InitialCondition::Nodes(nodes));
    }
    bail!("unknown initial condition {s:?} (all | node:i | nodes:i,j,...)")
}

fn cmd_mc(a: McArgs) -> Result<ExitCode> {
    let ng = parse_graph(&a.graph.graph)?;
    let params = a.params.params()?;
    let cfg = McConfig {
        n_traj: a.trajectories,
        t_max: a.t_max,
        seed: a.seed,
        init: parse_init(&a.init)?,
        per_edge: a.per_edge,
        track_times: Vec::new(),
    };
    let est = montecarlo::estimate(&ng.graph, params, &cfg)?;
    let mut w = sink(a.out.out.as_deref())?;
    match a.out.format {
        Format::Json => write_json(&mut w, &est)?,
        Format::Csv => {
            writeln!(w, "t,mean_infected_fraction,stderr,n_alive_trajectories")?;
            for t in 0..est.mean.len() {
                writeln!(w, "{t},{},{},{}", sig6(est.mean[t]), sig6(est.stderr[t]), est.alive[t])?;
            }
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode> {
    let ng = parse_graph(&a.graph.graph)?;
    let params = a.params.params()?;
    let report = analysis::dominance_check(&ng.graph, params, a.t)?;
    let mut w = sink(a.out.out.as_deref())?;
    match a.out.format {
        Format::Json => write_json(&mut w, &report)?,
        Format::Csv => {
            writeln!(w, "clause,max_violation")?;
            for (name, v) in report.clauses() {
                writeln!(w, "{name},{}", sig6(v))?;
            }
        }
    }
    w.flush()?;
    let worst = report.max_violation();
    if worst > a.tol {
        eprintln!("bound violated: max violation {worst:e} exceeds {:e}", a.tol);
        for (name, v) in report.clauses() {
            if v > a.tol {
                eprintln!("  {name}: {v:e}");
            }
        }
        return Ok(ExitCode::from(1));
    }
    eprintln!("all bounds hold (max violation {worst:e})");
    Ok(ExitCode::SUCCESS)
}

fn cmd_scan(a: ScanArgs) -> Result<ExitCode> {
    let ng = parse_graph(&a.graph.graph)?;
    let opts = ScanOptions {
        horizon: a.horizon,
        refine_tol: (a.refine_tol > 0.0).then_some(a.refine_tol),
    };
    let report = analysis::threshold_scan(&ng.graph, &ng.label, a.delta, &a.betas, &opts)?;
    for c in &report.crossings {
        eprintln!(
            "rho({}) crosses 1 in [{}, {}]: interpolated beta = {}{}",
            c.kind.label(),
            sig6(c.beta_lo),
            sig6(c.beta_hi),
            sig6(c.interpolated),
            c.refined.map(|r| format!(", refined beta = {}", sig6(r))).unwrap_or_default()
        );
    }
    if report.crossings.is_empty() {
        eprintln!("no radius crosses 1 on this grid");
    }
    let mut w = sink(a.out.out.as_deref())?;
    match a.out.format {
        Format::Json => write_json(&mut w, &report)?,
        Format::Csv => {
            writeln!(w, "beta,rho_m,rho_mp,rho_mpp,cond_holds")?;
            for r in &report.rows {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    sig6(r.beta),
                    sig6(r.rho_m),
                    sig6(r.rho_mp),
                    sig6(r.rho_mpp),
                    r.cond_holds
                )?;
            }
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_matrix(a: MatrixArgs) -> Result<ExitCode> {
    let ng = parse_graph(&a.graph.graph)?;
    let kind = match a.kind {
        MatrixKind::M => BoundKind::M,
        MatrixKind::Mp => BoundKind::MPrime,
        MatrixKind::Mpp => BoundKind::MDoublePrime,
    };
    let m = BoundMatrix::new(kind, &ng.graph, a.params.params()?).to_sparse();
    let mut w = sink(a.out.as_deref())?;
    m.write_triplets(&mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}
