mod expr;

use std::error::Error;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use expr::SizeExpr;
use induced_paths::bounds::{evaluate_target, BoundTarget, TargetReport};
use induced_paths::experiments::{
    parse_sweep_config, records_to_csv, OutputFormat, RamseyConfig, RamseyTrialRecord,
};
use induced_paths::graph::{graph_from_json, parse_edge_list};
use induced_paths::guarantees::{hypotheses_hold, CheckOutcome};
use induced_paths::{
    dfs_run, find_induced_path_guaranteed, is_path_in_gprime_induced_in_g, longest_gprime_path_induced_in_g_exact,
    longest_induced_path_exact, ramsey_trial, supercritical_trial, Graph, GuaranteeParams, OrderingMode, PipelineMode,
    QuerySource, RunOptions, StopRule, StrategyKind, SupercriticalConfig, Vertex, GENERATOR_NAME,
};

type Res<T> = Result<T, Box<dyn Error>>;

/// Long induced paths: search engine, exact oracles, union bounds and
/// seeded random-graph experiments.
#[derive(Parser)]
#[command(name = "induced-paths", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Serialize)]
struct Common {
    /// Base seed; multi-seed commands use seed, seed+1, ...
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format [default: json; sweep defaults to its config]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Exit with status 1 when any verdict fails
    #[arg(long, global = true)]
    strict: bool,
    /// Record a trace row every N rounds (run-dfs, supercritical)
    #[arg(long, global = true)]
    trace_every: Option<u64>,
    /// Multiplier applied to the default path parameters of Ramsey runs
    #[arg(long, global = true, default_value_t = 1.0)]
    scale: f64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
enum Command {
    /// Run the search on a graph file or a lazily sampled G(n, p)
    RunDfs(RunDfsArgs),
    /// Supercritical trials on G(n, (1+eps)/n)
    Supercritical(SupercriticalArgs),
    /// Two-colour pipeline trials on G(n, 64/n)
    Ramsey2(Ramsey2Args),
    /// Multicolour pipeline trials on G(kn, c ln k/n)
    Ramseyk(RamseykArgs),
    /// Evaluate union bounds against their thresholds
    Bounds(BoundsArgs),
    /// Exact longest induced path of a small graph
    Oracle(OracleArgs),
    /// Check the sparsity/expansion hypotheses and run the certified search
    Check(CheckArgs),
    /// Run a parameter grid from a JSON config
    Sweep(SweepArgs),
}

#[derive(Args, Serialize)]
struct RunDfsArgs {
    /// Graph to search (edge list, or JSON when the name ends in .json)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Host graph for the induced check; defaults to the input graph
    #[arg(long, requires = "input")]
    host: Option<PathBuf>,
    /// Vertex count for a sampled graph
    #[arg(long, conflicts_with = "input")]
    n: Option<usize>,
    /// Edge probability for a sampled graph, e.g. 1.2/n
    #[arg(long, requires = "n")]
    p: Option<SizeExpr>,
    #[arg(long, value_parser = parse_ordering, default_value = "identity")]
    order: OrderingMode,
    /// Stop once |S1| reaches this size
    #[arg(long)]
    s1: Option<SizeExpr>,
    /// Stop once |S2| reaches this size
    #[arg(long)]
    s2: Option<SizeExpr>,
    /// Stop once the stack holds a path with this many edges
    #[arg(long)]
    ell: Option<SizeExpr>,
    /// Stop after this many fresh pair queries
    #[arg(long)]
    budget: Option<SizeExpr>,
    /// Leave unqueried pairs of a sampled graph unexposed
    #[arg(long)]
    no_finalize: bool,
}

#[derive(Args, Serialize)]
struct SupercriticalArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, alias = "epsilon", default_value_t = 0.2)]
    eps: f64,
    /// Number of trials
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, value_parser = parse_ordering, default_value = "identity")]
    order: OrderingMode,
    /// Force the per-round property audit on or off (default: on for n ≤ 2000)
    #[arg(long)]
    audit: Option<bool>,
}

#[derive(Args, Serialize)]
struct PathOverrides {
    /// Path length target (edges), e.g. 7e-7*n
    #[arg(long)]
    ell: Option<SizeExpr>,
    #[arg(long)]
    s1: Option<SizeExpr>,
    #[arg(long)]
    s2: Option<SizeExpr>,
}

#[derive(Args, Serialize)]
struct Ramsey2Args {
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, value_parser = parse_strategy, default_value = "uniform_random")]
    strategy: StrategyKind,
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[command(flatten)]
    overrides: PathOverrides,
    /// Also run the unrestricted search on the pruned colour class
    #[arg(long)]
    empirical: bool,
}

#[derive(Args, Serialize)]
struct RamseykArgs {
    /// Vertices per colour; the host has k·n vertices
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long, default_value_t = 20.0)]
    c: f64,
    #[arg(long, value_parser = parse_strategy, default_value = "uniform_random")]
    strategy: StrategyKind,
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[command(flatten)]
    overrides: PathOverrides,
    #[arg(long)]
    empirical: bool,
}

#[derive(Args, Serialize)]
struct BoundsArgs {
    /// sparse-two, cut-two, sparse-multi, cut-multi or all
    #[arg(long, default_value = "all")]
    target: String,
    /// Vertex scale n [default: smallest size where every regime is populated]
    #[arg(long)]
    n: Option<f64>,
    /// Natural log of the colour count (multicolour targets)
    #[arg(long, default_value_t = 13.0)]
    ln_k: f64,
    #[arg(long, default_value_t = 200.0)]
    c: f64,
    /// Include the sampled summand rows
    #[arg(long)]
    rows: bool,
}

#[derive(Args, Serialize)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    /// Host graph: report the longest input-graph path induced in the host
    #[arg(long)]
    host: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CheckArgs {
    /// Graph whose edges the path must use
    #[arg(long)]
    input: PathBuf,
    /// Host graph in which the path must be induced; defaults to the input
    #[arg(long)]
    host: Option<PathBuf>,
    #[arg(long)]
    s1: SizeExpr,
    #[arg(long)]
    s2: SizeExpr,
    #[arg(long)]
    ell: SizeExpr,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
}

fn parse_ordering(s: &str) -> Result<OrderingMode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

impl Serialize for SizeExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

// ---------------------------------------------------------------------------

struct Output {
    json: Value,
    csv: String,
    passed: bool,
}

fn read_graph(path: &Path) -> Res<(Graph, Vec<(String, Vertex)>)> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        return Ok((graph_from_json(&text)?, Vec::new()));
    }
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(parse_edge_list(BufReader::new(file))?)
}

fn label_of(labels: &[(String, Vertex)], v: Vertex) -> String {
    labels
        .iter()
        .find(|(_, id)| *id == v)
        .map_or_else(|| v.to_string(), |(l, _)| l.clone())
}

fn seed_list(base: u64, count: u64) -> Vec<u64> {
    (0..count).map(|i| base.wrapping_add(i)).collect()
}

fn key_value_csv(pairs: &[(&str, String)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in pairs {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

fn run_dfs(a: &RunDfsArgs, common: &Common) -> Res<Output> {
    let (mut src, labels) = match (&a.input, a.n) {
        (Some(path), _) => {
            let (gp, labels) = read_graph(path)?;
            let g = match &a.host {
                Some(h) => read_graph(h)?.0,
                None => gp.clone(),
            };
            (QuerySource::fixed(gp, g)?, labels)
        }
        (None, Some(n)) => {
            let p = a.p.ok_or("--p is required with --n")?.eval(n as f64);
            (QuerySource::generative(n, p, common.seed)?, Vec::new())
        }
        (None, None) => return Err("give either --input or --n".into()),
    };
    let n = src.n();
    let stop = StopRule {
        s1: a.s1.map(|e| e.eval_count(n, 1)),
        s2: a.s2.map(|e| e.eval_count(n, 1)),
        stack_vertices: a.ell.map(|e| e.eval_count(n, 0) + 1),
        query_budget: a.budget.map(|e| e.eval_count(n, 0) as u64),
    };
    let opts = RunOptions {
        trace_every: common.trace_every,
        finalize: !a.no_finalize,
    };
    let run = dfs_run(a.order.ordering(n, common.seed), &mut src, stop, opts)?;
    let certified = match src.fixed_graphs() {
        Some((gp, g)) => is_path_in_gprime_induced_in_g(gp, g, &run.best_path)?,
        None => {
            let g = src.exposed_graph();
            is_path_in_gprime_induced_in_g(&g, &g, &run.best_path)?
        }
    };
    let path_labels: Vec<String> = run.best_path.iter().map(|&v| label_of(&labels, v)).collect();
    let csv = key_value_csv(&[
        ("n", n.to_string()),
        ("rounds", run.rounds.to_string()),
        ("max_u", run.max_u.to_string()),
        ("path_length", run.path_length.to_string()),
        ("s1_final", run.s1_final.to_string()),
        ("s2_final", run.s2_final.to_string()),
        ("t_final", run.t_final.to_string()),
        ("ut_queries", run.ut_queries.to_string()),
        ("new_queries", run.new_queries.to_string()),
        ("stop_reason", format!("{:?}", run.stop_reason)),
        ("certified", certified.to_string()),
        ("best_path", path_labels.join(" ")),
    ]);
    let mut json = serde_json::to_value(&run)?;
    json["certified"] = json!(certified);
    if !labels.is_empty() {
        json["best_path_labels"] = json!(path_labels);
    }
    Ok(Output {
        json,
        csv,
        passed: certified,
    })
}

fn supercritical(a: &SupercriticalArgs, common: &Common) -> Res<Output> {
    let mut cfg = SupercriticalConfig::new(a.n, a.eps)?;
    cfg.ordering = a.order;
    cfg.trace_every = common.trace_every;
    if let Some(audit) = a.audit {
        cfg.audit = audit;
    }
    let rows = seed_list(common.seed, a.seeds)
        .into_iter()
        .map(|s| supercritical_trial(&cfg, s))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = rows.iter().all(|r| {
        r.length_ok && r.s2_within_excess && r.excess_ok && r.path_certified && r.audit_failures == 0
    });
    let meta = vec![("generator".to_string(), GENERATOR_NAME.to_string())];
    Ok(Output {
        csv: records_to_csv(&rows, &meta)?,
        json: json!({"trials": rows}),
        passed,
    })
}

fn path_params(o: &PathOverrides, cfg: &RamseyConfig) -> Option<GuaranteeParams> {
    if o.ell.is_none() && o.s1.is_none() && o.s2.is_none() {
        return None;
    }
    let n = cfg.host_vertices();
    let base = cfg.mode().default_params(n, cfg.k, cfg.scale);
    Some(GuaranteeParams {
        ell: o.ell.map_or(base.ell, |e| e.eval_count(n, 1)),
        s1: o.s1.map_or(base.s1, |e| e.eval_count(n, 1)),
        s2: o.s2.map_or(base.s2, |e| e.eval_count(n, 1)),
    })
}

fn ramsey(mut cfg: RamseyConfig, overrides: &PathOverrides, seeds: u64, common: &Common) -> Res<Output> {
    cfg.params = path_params(overrides, &cfg);
    let trials = seed_list(common.seed, seeds)
        .into_iter()
        .map(|s| ramsey_trial(&cfg, s))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<RamseyTrialRecord> = trials.iter().map(|t| t.record.clone()).collect();
    let passed = rows
        .iter()
        .all(|r| r.certified && r.edge_ok && r.empirical_certified != Some(false));
    let reports: Vec<Value> = trials
        .iter()
        .map(|t| {
            json!({
                "record": t.record,
                "outcome": t.report.outcome,
                "stages": t.report.stages,
                "empirical_path": t.empirical_path,
            })
        })
        .collect();
    let meta = vec![
        ("generator".to_string(), GENERATOR_NAME.to_string()),
        ("note".to_string(), "colouring strategies are lower-bound probes".to_string()),
    ];
    Ok(Output {
        csv: records_to_csv(&rows, &meta)?,
        json: json!({"trials": reports}),
        passed,
    })
}

fn bounds(a: &BoundsArgs) -> Res<Output> {
    let targets: Vec<BoundTarget> = if a.target == "all" {
        BoundTarget::ALL.to_vec()
    } else {
        vec![a.target.parse::<BoundTarget>()?]
    };
    let mut reports: Vec<TargetReport> = Vec::new();
    for t in targets {
        let mut r = evaluate_target(t, a.n.unwrap_or(t.default_n()), a.ln_k, a.c)?;
        if !a.rows {
            if let Some(s) = r.sparse.as_mut() {
                s.rows.clear();
            }
        }
        reports.push(r);
    }
    let mut csv = String::from("target,n,quantity,value,relation,threshold,pass\n");
    for r in &reports {
        for c in &r.checks {
            csv.push_str(&format!(
                "{},{:e},{},{},{},{},{}\n",
                r.target.name(),
                r.n,
                c.quantity,
                c.value,
                c.relation.symbol(),
                c.threshold,
                c.pass
            ));
        }
        if let Some(fc) = r.feasible_c {
            csv.push_str(&format!("{},{:e},feasible_c,{fc},,,\n", r.target.name(), r.n));
        }
    }
    Ok(Output {
        passed: reports.iter().all(TargetReport::passed),
        json: json!({"reports": reports}),
        csv,
    })
}

fn oracle(a: &OracleArgs) -> Res<Output> {
    let (gp, labels) = read_graph(&a.input)?;
    let found = match &a.host {
        Some(h) => longest_gprime_path_induced_in_g_exact(&gp, &read_graph(h)?.0)?,
        None => longest_induced_path_exact(&gp)?,
    };
    let mut json = json!({"length": found.length, "witness": found.witness});
    let witness_labels: Vec<String> = found.witness.iter().map(|&v| label_of(&labels, v)).collect();
    if !labels.is_empty() {
        json["witness_labels"] = json!(witness_labels);
    }
    Ok(Output {
        csv: format!("length,witness\n{},{}\n", found.length, witness_labels.join(" ")),
        json,
        passed: true,
    })
}

fn outcome_name(o: &CheckOutcome) -> &'static str {
    match o {
        CheckOutcome::Pass => "pass",
        CheckOutcome::Witness { .. } => "witness",
        CheckOutcome::Undecided { .. } => "undecided",
    }
}

fn check(a: &CheckArgs) -> Res<Output> {
    let (gp, _) = read_graph(&a.input)?;
    let g = match &a.host {
        Some(h) => read_graph(h)?.0,
        None => gp.clone(),
    };
    let n = gp.n();
    let params = GuaranteeParams::new(a.s1.eval_count(n, 1), a.s2.eval_count(n, 1), a.ell.eval_count(n, 1))?;
    let (density, expansion) = hypotheses_hold(&gp, &g, &params);
    let order = induced_paths::VertexOrdering::identity(n);
    let (status, path, detail) = match find_induced_path_guaranteed(&gp, &g, params, order) {
        Ok(found) => ("certified", Some(found.path), Value::Null),
        Err(e) => ("failed", None, json!(e.to_string())),
    };
    let certified = path.is_some();
    let path_text = path
        .as_ref()
        .map(|p| p.iter().map(Vertex::to_string).collect::<Vec<_>>().join(" "))
        .unwrap_or_default();
    let csv = key_value_csv(&[
        ("ell", params.ell.to_string()),
        ("s1", params.s1.to_string()),
        ("s2", params.s2.to_string()),
        ("local_density", outcome_name(&density).to_string()),
        ("expansion", outcome_name(&expansion).to_string()),
        ("status", status.to_string()),
        ("path", path_text),
    ]);
    Ok(Output {
        json: json!({
            "params": params,
            "local_density": density,
            "expansion": expansion,
            "status": status,
            "path": path,
            "error": detail,
        }),
        csv,
        passed: certified,
    })
}

fn sweep(a: &SweepArgs, common: &Common) -> Res<(Output, Option<Format>, Option<String>)> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| format!("{}: {e}", a.config.display()))?;
    let cfg = parse_sweep_config(&text)?;
    let out = induced_paths::run_sweep(&cfg)?;
    let passed = out.summary.iter().all(|c| c.verdicts.values().all(|&f| f == 1.0));
    let config_format = match cfg.output.format {
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Json => Format::Json,
    };
    Ok((
        Output {
            csv: out.to_csv()?,
            json: serde_json::to_value(&out)?,
            passed,
        },
        Some(common.format.unwrap_or(config_format)),
        cfg.output.path,
    ))
}

fn render(format: Format, config: &Value, out: &Output) -> Res<String> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json!({"config": config, "result": out.json}))?;
            s.push('\n');
            s
        }
        Format::Csv => format!("# config: {}\n{}", serde_json::to_string(config)?, out.csv),
    })
}

fn execute(cli: &Cli) -> Res<bool> {
    let common = &cli.common;
    let mut format = common.format.unwrap_or(Format::Json);
    let mut dest = None;
    let out = match &cli.command {
        Command::RunDfs(a) => run_dfs(a, common)?,
        Command::Supercritical(a) => supercritical(a, common)?,
        Command::Ramsey2(a) => {
            let cfg = RamseyConfig {
                empirical: a.empirical,
                ..RamseyConfig::two_colour(a.n, a.strategy, common.scale)
            };
            ramsey(cfg, &a.overrides, a.seeds, common)?
        }
        Command::Ramseyk(a) => {
            let cfg = RamseyConfig {
                empirical: a.empirical,
                ..RamseyConfig::multicolour(a.n, a.k, a.c, a.strategy, common.scale)
            };
            ramsey(cfg, &a.overrides, a.seeds, common)?
        }
        Command::Bounds(a) => bounds(a)?,
        Command::Oracle(a) => oracle(a)?,
        Command::Check(a) => check(a)?,
        Command::Sweep(a) => {
            let (out, f, path) = sweep(a, common)?;
            format = f.unwrap_or(format);
            dest = path;
            out
        }
    };
    let mut config = json!({
        "common": common,
        "args": &cli.command,
        "version": env!("CARGO_PKG_VERSION"),
    });
    if let Command::Ramsey2(_) | Command::Ramseyk(_) = &cli.command {
        let (n, k, mode) = match &cli.command {
            Command::Ramsey2(a) => (a.n, 2, PipelineMode::TwoColour),
            Command::Ramseyk(a) => (a.n * a.k as usize, a.k, PipelineMode::Multi { c: a.c }),
            _ => unreachable!(),
        };
        config["default_params"] = json!(mode.default_params(n, k, common.scale));
    }
    let text = render(format, &config, &out)?;
    match dest {
        Some(path) => std::fs::write(&path, text).map_err(|e| format!("{path}: {e}"))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(out.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if cli.common.strict => ExitCode::from(1),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
