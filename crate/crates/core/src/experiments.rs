//! Seeded trials for the three random-graph settings (supercritical search,
//! two-colour and multicolour Ramsey pipelines), edge-colouring strategies
//! and grid sweeps over them.
//!
//! Every trial is a pure function of its configuration and 64-bit seed.
//! Colouring strategies are simple adversaries and only probe the "every
//! colouring" statements from below.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::audit::Auditor;
use crate::dfs::{dfs_run, dfs_run_observed, DfsError, RunOptions, RunRecord, StopRule, VertexOrdering};
use crate::graph::{excess, is_path_in_gprime_induced_in_g, Graph, GraphError};
use crate::guarantees::{
    certify_monochromatic, pipeline_graphs, ramsey_pipeline, EdgeColouring, GuaranteeError, GuaranteeParams,
    PipelineMode, PipelineOutcome, PipelineReport,
};
use crate::source::{sample_gnp, QuerySource, SourceError, GENERATOR_NAME};

/// Word stream used for colouring randomness.
pub const COLOURING_STREAM: u64 = 3;

/// Supercritical trials above this size skip the per-round property audit
/// (the `|S2| ≤ excess` check still runs every round).
pub const FULL_AUDIT_LIMIT: usize = 2000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("config line {line}, column {column}: {msg}")]
    Config { line: usize, column: usize, msg: String },
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Guarantee(#[from] GuaranteeError),
    #[error(transparent)]
    Dfs(#[from] DfsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("output: {0}")]
    Output(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingMode {
    #[default]
    Identity,
    Shuffled,
}

impl OrderingMode {
    pub fn ordering(self, n: usize, seed: u64) -> VertexOrdering {
        match self {
            OrderingMode::Identity => VertexOrdering::identity(n),
            OrderingMode::Shuffled => VertexOrdering::shuffled(n, seed),
        }
    }
}

impl FromStr for OrderingMode {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(OrderingMode::Identity),
            "shuffled" | "seeded-shuffle" | "seeded_shuffle" => Ok(OrderingMode::Shuffled),
            _ => Err(ExperimentError::Param(format!("unknown ordering '{s}'"))),
        }
    }
}

impl fmt::Display for OrderingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderingMode::Identity => "identity",
            OrderingMode::Shuffled => "shuffled",
        })
    }
}

// ---------------------------------------------------------------------------
// Supercritical trials
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupercriticalConfig {
    pub n: usize,
    pub epsilon: f64,
    pub ordering: OrderingMode,
    pub trace_every: Option<u64>,
    /// Run the incremental property auditor every round.
    pub audit: bool,
}

impl SupercriticalConfig {
    pub fn new(n: usize, epsilon: f64) -> Result<Self, ExperimentError> {
        if n == 0 {
            return Err(ExperimentError::Param("n must be at least 1".into()));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ExperimentError::Param(format!("epsilon {epsilon} is not in (0, 1)")));
        }
        Ok(SupercriticalConfig {
            n,
            epsilon,
            ordering: OrderingMode::Identity,
            trace_every: None,
            audit: n <= FULL_AUDIT_LIMIT,
        })
    }

    /// `(1 + ε)/n`, capped at 1.
    pub fn p(&self) -> f64 {
        ((1.0 + self.epsilon) / self.n as f64).min(1.0)
    }

    /// `ε²n/5`.
    pub fn length_target(&self) -> f64 {
        self.epsilon * self.epsilon * self.n as f64 / 5.0
    }

    /// `ε³n`.
    pub fn excess_cap(&self) -> f64 {
        self.epsilon.powi(3) * self.n as f64
    }

    /// `εn²/2`, the Step-2 query count the search is expected to stay under
    /// before its longest stack appears.
    pub fn query_threshold(&self) -> f64 {
        self.epsilon * (self.n as f64).powi(2) / 2.0
    }
}

/// One supercritical trial. Verdict fields are functions of the other fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub n: usize,
    pub epsilon: f64,
    pub p: f64,
    pub ordering: OrderingMode,
    pub rounds: u64,
    pub max_u: usize,
    pub path_length: usize,
    pub s1_final: usize,
    pub s2_final: usize,
    pub edge_count: usize,
    pub excess_final: usize,
    pub ut_queries: u64,
    pub ut_queries_at_peak: u64,
    pub new_queries: u64,
    pub query_threshold: f64,
    pub length_target: f64,
    pub excess_cap: f64,
    /// Rounds at which `|S2|` exceeded the excess of the graph exposed so far.
    pub s2_round_violations: u64,
    pub audit_rounds: u64,
    pub audit_failures: u64,
    pub path_certified: bool,
    pub length_ok: bool,
    pub s2_within_excess: bool,
    pub excess_ok: bool,
    pub generator: String,
}

impl TrialRecord {
    /// Recomputes the verdicts from the numeric fields.
    pub fn verdicts_consistent(&self) -> bool {
        self.path_length == self.max_u.saturating_sub(1)
            && self.length_ok == (self.path_length as f64 >= self.length_target)
            && self.s2_within_excess == (self.s2_final <= self.excess_final && self.s2_round_violations == 0)
            && self.excess_ok == (self.excess_final as f64 <= self.excess_cap)
    }
}

/// Runs the search on a lazily exposed `G(n, (1+ε)/n)` to natural
/// termination, then exposes the remaining pairs.
pub fn supercritical_run(cfg: &SupercriticalConfig, seed: u64) -> Result<(TrialRecord, RunRecord), ExperimentError> {
    let n = cfg.n;
    let mut src = QuerySource::generative(n, cfg.p(), seed)?;
    let order = cfg.ordering.ordering(n, seed);
    let mut auditor = cfg.audit.then(Auditor::new);
    let mut violations = 0u64;
    let opts = RunOptions {
        trace_every: cfg.trace_every,
        finalize: true,
    };
    let (run, _) = dfs_run_observed(order, &mut src, StopRule::never(), opts, |state, src| {
        if src.exposed_excess().is_some_and(|x| state.s2_len() > x) {
            violations += 1;
        }
        if let Some(a) = auditor.as_mut() {
            a.check(state, src);
        }
    })?;
    let g = src.exposed_graph();
    let excess_final = excess(&g);
    let (audit_rounds, audit_failures) = auditor.map_or((0, 0), |a| (a.rounds_checked, a.failures.len() as u64));
    let record = TrialRecord {
        seed,
        n,
        epsilon: cfg.epsilon,
        p: cfg.p(),
        ordering: cfg.ordering,
        rounds: run.rounds,
        max_u: run.max_u,
        path_length: run.path_length,
        s1_final: run.s1_final,
        s2_final: run.s2_final,
        edge_count: g.m(),
        excess_final,
        ut_queries: run.ut_queries,
        ut_queries_at_peak: run.ut_queries_at_peak,
        new_queries: run.new_queries,
        query_threshold: cfg.query_threshold(),
        length_target: cfg.length_target(),
        excess_cap: cfg.excess_cap(),
        s2_round_violations: violations,
        audit_rounds,
        audit_failures,
        path_certified: is_path_in_gprime_induced_in_g(&g, &g, &run.best_path)?,
        length_ok: run.path_length as f64 >= cfg.length_target(),
        s2_within_excess: run.s2_final <= excess_final && violations == 0,
        excess_ok: excess_final as f64 <= cfg.excess_cap(),
        generator: GENERATOR_NAME.to_string(),
    };
    Ok((record, run))
}

pub fn supercritical_trial(cfg: &SupercriticalConfig, seed: u64) -> Result<TrialRecord, ExperimentError> {
    supercritical_run(cfg, seed).map(|(r, _)| r)
}

// ---------------------------------------------------------------------------
// Colouring strategies
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Independent uniform colour per edge.
    #[default]
    UniformRandom,
    /// Colour `(u + v) mod k`.
    LabelAlternating,
    /// Edges in order; each takes the colour least used so far at its two
    /// endpoints.
    GreedyBalance,
    /// Colour `index mod k` in edge order.
    RoundRobin,
    /// Every edge colour 0.
    SingleColour,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::UniformRandom,
        StrategyKind::LabelAlternating,
        StrategyKind::GreedyBalance,
        StrategyKind::RoundRobin,
        StrategyKind::SingleColour,
    ];
}

impl FromStr for StrategyKind {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "uniform" | "uniform_random" | "random" => Ok(StrategyKind::UniformRandom),
            "alternating" | "label_alternating" => Ok(StrategyKind::LabelAlternating),
            "greedy" | "greedy_balance" => Ok(StrategyKind::GreedyBalance),
            "round_robin" => Ok(StrategyKind::RoundRobin),
            "single" | "single_colour" | "single_color" => Ok(StrategyKind::SingleColour),
            _ => Err(ExperimentError::Param(format!("unknown colouring strategy '{s}'"))),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::UniformRandom => "uniform_random",
            StrategyKind::LabelAlternating => "label_alternating",
            StrategyKind::GreedyBalance => "greedy_balance",
            StrategyKind::RoundRobin => "round_robin",
            StrategyKind::SingleColour => "single_colour",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ColouringStrategy {
    pub kind: StrategyKind,
    pub k: u32,
    pub seed: u64,
}

impl ColouringStrategy {
    pub fn colour(&self, g: &Graph) -> EdgeColouring {
        let k = self.k.max(1);
        let colours: Vec<u32> = match self.kind {
            StrategyKind::UniformRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(COLOURING_STREAM);
                (0..g.m()).map(|_| rng.gen_range(0..k)).collect()
            }
            StrategyKind::LabelAlternating => g.edges().map(|(u, v)| (u + v) % k).collect(),
            StrategyKind::RoundRobin => (0..g.m()).map(|i| (i % k as usize) as u32).collect(),
            StrategyKind::SingleColour => vec![0; g.m()],
            StrategyKind::GreedyBalance => {
                let ku = k as usize;
                let mut load = vec![0u32; g.n() * ku];
                g.edges()
                    .map(|(u, v)| {
                        let (bu, bv) = (u as usize * ku, v as usize * ku);
                        let c = (0..ku).min_by_key(|&c| load[bu + c] + load[bv + c]).unwrap_or(0);
                        load[bu + c] += 1;
                        load[bv + c] += 1;
                        c as u32
                    })
                    .collect()
            }
        };
        EdgeColouring::new(g, k, colours).expect("strategies emit one colour below k per edge")
    }
}

// ---------------------------------------------------------------------------
// Ramsey trials
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RamseyConfig {
    /// Per-colour size: the host has `k·n` vertices (`k = 2` uses `n`).
    pub n: usize,
    pub k: u32,
    /// Density constant for the multicolour host; `None` selects the
    /// two-colour host `G(n, 64/n)`.
    pub c: Option<f64>,
    pub strategy: StrategyKind,
    pub scale: f64,
    /// Explicit parameters instead of the scaled defaults.
    pub params: Option<GuaranteeParams>,
    /// Also run the search without stopping rule on the pruned graph.
    pub empirical: bool,
}

impl RamseyConfig {
    pub fn two_colour(n: usize, strategy: StrategyKind, scale: f64) -> Self {
        RamseyConfig {
            n,
            k: 2,
            c: None,
            strategy,
            scale,
            params: None,
            empirical: false,
        }
    }

    pub fn multicolour(n: usize, k: u32, c: f64, strategy: StrategyKind, scale: f64) -> Self {
        RamseyConfig {
            n,
            k,
            c: Some(c),
            strategy,
            scale,
            params: None,
            empirical: false,
        }
    }

    pub fn host_vertices(&self) -> usize {
        match self.c {
            None => self.n,
            Some(_) => self.n * self.k as usize,
        }
    }

    pub fn p(&self) -> f64 {
        match self.c {
            None => 64.0 / self.n as f64,
            Some(c) => c * (self.k as f64).ln() / self.n as f64,
        }
    }

    pub fn mode(&self) -> PipelineMode {
        match self.c {
            None => PipelineMode::TwoColour,
            Some(c) => PipelineMode::Multi { c },
        }
    }

    pub fn resolved_params(&self) -> GuaranteeParams {
        self.params
            .unwrap_or_else(|| self.mode().default_params(self.host_vertices(), self.k, self.scale))
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.n == 0 {
            return Err(ExperimentError::Param("n must be at least 1".into()));
        }
        if self.c.is_none() && self.k != 2 {
            return Err(ExperimentError::Param("the two-colour host needs k = 2".into()));
        }
        if self.c.is_some_and(|c| !(c > 0.0)) || self.k < 2 {
            return Err(ExperimentError::Param("multicolour trials need k ≥ 2 and c > 0".into()));
        }
        if !(self.scale > 0.0) {
            return Err(ExperimentError::Param(format!("scale {} must be positive", self.scale)));
        }
        let p = self.p();
        if !(0.0..=1.0).contains(&p) {
            return Err(ExperimentError::Param(format!("edge probability {p} is not in [0, 1]")));
        }
        Ok(())
    }
}

/// One Ramsey trial, flattened for tabular output.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RamseyTrialRecord {
    pub seed: u64,
    pub n: usize,
    pub k: u32,
    pub c: Option<f64>,
    pub strategy: String,
    pub host_vertices: usize,
    pub p: f64,
    pub host_edges: usize,
    pub edge_mean: f64,
    pub edge_sd: f64,
    pub edge_z: f64,
    /// Host edge count within 5 standard deviations of its mean.
    pub edge_ok: bool,
    pub colour: u32,
    pub class_edges: usize,
    pub class_vertices: usize,
    pub prune_threshold: usize,
    pub pruned_vertices: usize,
    pub pruned_edges: usize,
    pub ell: usize,
    pub s1: usize,
    pub s2: usize,
    pub status: String,
    pub path_length: Option<usize>,
    pub certified: bool,
    pub empirical_length: Option<usize>,
    pub empirical_certified: Option<bool>,
    pub generator: String,
}

#[derive(Debug, Clone)]
pub struct RamseyTrial {
    pub record: RamseyTrialRecord,
    pub report: PipelineReport,
    pub empirical_path: Option<Vec<crate::graph::Vertex>>,
}

/// Samples the host, colours it, and runs the pipeline.
pub fn ramsey_trial(cfg: &RamseyConfig, seed: u64) -> Result<RamseyTrial, ExperimentError> {
    cfg.validate()?;
    let nv = cfg.host_vertices();
    let p = cfg.p();
    let host = sample_gnp(nv, p, seed)?;
    let strategy = ColouringStrategy {
        kind: cfg.strategy,
        k: cfg.k,
        seed,
    };
    let colouring = strategy.colour(&host);
    let params = cfg.resolved_params();
    let report = ramsey_pipeline(&host, &colouring, cfg.mode(), params)?;

    let (empirical_length, empirical_certified, empirical_path) = if cfg.empirical {
        let graphs = pipeline_graphs(&host, &colouring, cfg.mode())?;
        let m = graphs.pruned.graph.n();
        let mut src = QuerySource::fixed(graphs.pruned.graph.clone(), graphs.host_part.clone())?;
        let run = dfs_run(VertexOrdering::identity(m), &mut src, StopRule::never(), RunOptions::default())?;
        let cert = certify_monochromatic(&host, &colouring, &graphs, &run.best_path)?;
        (Some(run.path_length), Some(cert.holds()), Some(graphs.to_host(&run.best_path)))
    } else {
        (None, None, None)
    };

    let pairs = nv as f64 * (nv as f64 - 1.0) / 2.0;
    let edge_mean = pairs * p;
    let edge_sd = (pairs * p * (1.0 - p)).sqrt();
    let edge_z = if edge_sd > 0.0 {
        (host.m() as f64 - edge_mean) / edge_sd
    } else {
        0.0
    };
    let (status, path_length) = match &report.outcome {
        PipelineOutcome::Certified { length, .. } => ("certified", Some(*length)),
        PipelineOutcome::TooSmall { .. } => ("too_small", None),
        PipelineOutcome::HypothesesViolated { .. } => ("hypotheses_violated", None),
    };
    let record = RamseyTrialRecord {
        seed,
        n: cfg.n,
        k: cfg.k,
        c: cfg.c,
        strategy: cfg.strategy.to_string(),
        host_vertices: nv,
        p,
        host_edges: host.m(),
        edge_mean,
        edge_sd,
        edge_z,
        edge_ok: edge_z.abs() <= 5.0,
        colour: report.colour,
        class_edges: report.stages.class_edges,
        class_vertices: report.stages.class_vertices,
        prune_threshold: report.prune_threshold,
        pruned_vertices: report.stages.pruned_vertices,
        pruned_edges: report.stages.pruned_edges,
        ell: params.ell,
        s1: params.s1,
        s2: params.s2,
        status: status.to_string(),
        path_length,
        certified: report.certified(),
        empirical_length,
        empirical_certified,
        generator: GENERATOR_NAME.to_string(),
    };
    Ok(RamseyTrial {
        record,
        report,
        empirical_path,
    })
}

/// Two-colour trial on `G(n, 64/n)`.
pub fn ramsey2_trial(
    n: usize,
    seed: u64,
    strategy: StrategyKind,
    scale: f64,
    params: Option<GuaranteeParams>,
) -> Result<RamseyTrial, ExperimentError> {
    let mut cfg = RamseyConfig::two_colour(n, strategy, scale);
    cfg.params = params;
    ramsey_trial(&cfg, seed)
}

/// Multicolour trial on `G(kn, c·ln k/n)`.
pub fn ramseyk_trial(
    n: usize,
    k: u32,
    c: f64,
    seed: u64,
    strategy: StrategyKind,
    scale: f64,
) -> Result<RamseyTrial, ExperimentError> {
    ramsey_trial(&RamseyConfig::multicolour(n, k, c, strategy, scale), seed)
}

// ---------------------------------------------------------------------------
// Tabular output
// ---------------------------------------------------------------------------

/// CSV header of a record type.
pub fn csv_header<T: Serialize + Default>() -> Vec<String> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    w.serialize(T::default()).expect("records serialize");
    let bytes = w.into_inner().expect("in-memory writer");
    let text = String::from_utf8(bytes).expect("csv is utf-8");
    let line = text.lines().next().unwrap_or_default();
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(line.as_bytes())
        .records()
        .next()
        .and_then(Result::ok)
        .map(|r| r.iter().map(str::to_string).collect())
        .unwrap_or_default()
}

/// Records as CSV, preceded by `# key: value` metadata lines. The header is
/// written even when there are no rows.
pub fn records_to_csv<T: Serialize + Default>(
    rows: &[T],
    metadata: &[(String, String)],
) -> Result<String, ExperimentError> {
    let mut out = String::new();
    for (k, v) in metadata {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let out_err = |e: csv::Error| ExperimentError::Output(e.to_string());
    w.write_record(csv_header::<T>()).map_err(out_err)?;
    for r in rows {
        w.serialize(r).map_err(out_err)?;
    }
    let bytes = w.into_inner().map_err(|e| ExperimentError::Output(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).map_err(|e| ExperimentError::Output(e.to_string()))?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Supercritical,
    Ramsey2,
    Ramseyk,
}

impl ExperimentKind {
    fn grid_keys(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Supercritical => &["n", "epsilon", "ordering"],
            ExperimentKind::Ramsey2 => &["n", "strategy"],
            ExperimentKind::Ramseyk => &["n", "k", "c", "strategy"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    /// Seeds `0..count`.
    Count(u64),
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Count(c) => (0..*c).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub path: Option<String>,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<Value>>,
    pub seeds: SeedSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn line_of(text: &str, needle: &str) -> usize {
    text.lines().position(|l| l.contains(needle)).map_or(0, |i| i + 1)
}

/// Parses and validates a sweep configuration.
pub fn parse_sweep_config(text: &str) -> Result<SweepConfig, ExperimentError> {
    let cfg: SweepConfig = serde_json::from_str(text).map_err(|e| ExperimentError::Config {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let allowed = cfg.experiment.grid_keys();
    for (key, values) in &cfg.grid {
        let at = |msg: String| ExperimentError::Config {
            line: line_of(text, &format!("\"{key}\"")),
            column: 0,
            msg,
        };
        if !allowed.contains(&key.as_str()) {
            return Err(at(format!(
                "grid key '{key}' is not valid for this experiment (expected one of {allowed:?})"
            )));
        }
        for v in values {
            let ok = match key.as_str() {
                "n" | "k" => v.as_u64().is_some_and(|x| x >= 1),
                "epsilon" | "c" => v.as_f64().is_some(),
                "ordering" => v.as_str().is_some_and(|s| s.parse::<OrderingMode>().is_ok()),
                "strategy" => v.as_str().is_some_and(|s| s.parse::<StrategyKind>().is_ok()),
                _ => false,
            };
            if !ok {
                return Err(at(format!("grid value {v} is not valid for '{key}'")));
            }
        }
    }
    if !(cfg.scale > 0.0) {
        return Err(ExperimentError::Config {
            line: line_of(text, "\"scale\""),
            column: 0,
            msg: format!("scale {} must be positive", cfg.scale),
        });
    }
    Ok(cfg)
}

pub type Cell = BTreeMap<String, Value>;

impl SweepConfig {
    /// Cartesian product of the grid in key order, values in listed order.
    /// A grid without keys, or with an empty value list, has no cells.
    pub fn cells(&self) -> Vec<Cell> {
        if self.grid.is_empty() || self.grid.values().any(Vec::is_empty) {
            return Vec::new();
        }
        let mut cells = vec![Cell::new()];
        for (key, values) in &self.grid {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.insert(key.clone(), v.clone());
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SweepRows {
    Supercritical(Vec<TrialRecord>),
    Ramsey(Vec<RamseyTrialRecord>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub cell: Cell,
    pub trials: usize,
    pub median_path_length: Option<f64>,
    /// Fraction of trials passing each verdict.
    pub verdicts: BTreeMap<String, f64>,
    pub mean_excess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub experiment: ExperimentKind,
    pub generator: String,
    pub version: String,
    pub seeds: Vec<u64>,
    pub scale: f64,
    pub cells: usize,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub metadata: SweepMetadata,
    pub summary: Vec<CellSummary>,
    pub rows: SweepRows,
}

fn cell_u64(cell: &Cell, key: &str, default: u64) -> u64 {
    cell.get(key).and_then(Value::as_u64).unwrap_or(default)
}

fn cell_f64(cell: &Cell, key: &str, default: f64) -> f64 {
    cell.get(key).and_then(Value::as_f64).unwrap_or(default)
}

fn cell_parse<T: FromStr + Default>(cell: &Cell, key: &str) -> T {
    cell.get(key)
        .and_then(Value::as_str)
        .and_then(|s| s.parse().ok())
        .unwrap_or_default()
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    })
}

fn fraction<T>(rows: &[T], f: impl Fn(&T) -> bool) -> f64 {
    if rows.is_empty() {
        0.0
    } else {
        rows.iter().filter(|r| f(r)).count() as f64 / rows.len() as f64
    }
}

/// Runs every `(cell, seed)` trial of the grid. Trials run in parallel;
/// rows come out ordered by cell, then seed.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput, ExperimentError> {
    let seeds = cfg.seeds.seeds();
    let cells = cfg.cells();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let per_cell = seeds.len();

    let (rows, summary) = match cfg.experiment {
        ExperimentKind::Supercritical => {
            let rows: Vec<TrialRecord> = jobs
                .par_iter()
                .map(|&(c, seed)| {
                    let cell = &cells[c];
                    let mut sc = SupercriticalConfig::new(cell_u64(cell, "n", 2000) as usize, cell_f64(cell, "epsilon", 0.2))?;
                    sc.ordering = cell_parse(cell, "ordering");
                    supercritical_trial(&sc, seed)
                })
                .collect::<Result<_, _>>()?;
            let summary = cells
                .iter()
                .zip(rows.chunks(per_cell.max(1)))
                .map(|(cell, chunk)| CellSummary {
                    cell: cell.clone(),
                    trials: chunk.len(),
                    median_path_length: median(&mut chunk.iter().map(|r| r.path_length as f64).collect::<Vec<_>>()),
                    verdicts: BTreeMap::from([
                        ("length_ok".to_string(), fraction(chunk, |r| r.length_ok)),
                        ("s2_within_excess".to_string(), fraction(chunk, |r| r.s2_within_excess)),
                        ("excess_ok".to_string(), fraction(chunk, |r| r.excess_ok)),
                        ("path_certified".to_string(), fraction(chunk, |r| r.path_certified)),
                    ]),
                    mean_excess: (!chunk.is_empty())
                        .then(|| chunk.iter().map(|r| r.excess_final as f64).sum::<f64>() / chunk.len() as f64),
                })
                .collect();
            (SweepRows::Supercritical(rows), summary)
        }
        kind => {
            let rows: Vec<RamseyTrialRecord> = jobs
                .par_iter()
                .map(|&(c, seed)| {
                    let cell = &cells[c];
                    let strategy = cell_parse(cell, "strategy");
                    let rc = if kind == ExperimentKind::Ramsey2 {
                        RamseyConfig::two_colour(cell_u64(cell, "n", 10_000) as usize, strategy, cfg.scale)
                    } else {
                        RamseyConfig::multicolour(
                            cell_u64(cell, "n", 1000) as usize,
                            cell_u64(cell, "k", 3) as u32,
                            cell_f64(cell, "c", 20.0),
                            strategy,
                            cfg.scale,
                        )
                    };
                    ramsey_trial(&rc, seed).map(|t| t.record)
                })
                .collect::<Result<_, _>>()?;
            let summary = cells
                .iter()
                .zip(rows.chunks(per_cell.max(1)))
                .map(|(cell, chunk)| CellSummary {
                    cell: cell.clone(),
                    trials: chunk.len(),
                    median_path_length: median(
                        &mut chunk.iter().filter_map(|r| r.path_length.map(|x| x as f64)).collect::<Vec<_>>(),
                    ),
                    verdicts: BTreeMap::from([
                        ("certified".to_string(), fraction(chunk, |r| r.certified)),
                        ("edge_ok".to_string(), fraction(chunk, |r| r.edge_ok)),
                    ]),
                    mean_excess: None,
                })
                .collect();
            (SweepRows::Ramsey(rows), summary)
        }
    };

    Ok(SweepOutput {
        metadata: SweepMetadata {
            experiment: cfg.experiment,
            generator: GENERATOR_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seeds,
            scale: cfg.scale,
            cells: cells.len(),
            note: "colouring strategies are lower-bound probes, not exhaustive adversaries".to_string(),
        },
        summary,
        rows,
    })
}

impl SweepOutput {
    pub fn metadata_lines(&self) -> Vec<(String, String)> {
        let m = &self.metadata;
        vec![
            ("experiment".into(), serde_json::to_string(&m.experiment).unwrap_or_default()),
            ("generator".into(), m.generator.clone()),
            ("version".into(), m.version.clone()),
            ("seeds".into(), format!("{:?}", m.seeds)),
            ("scale".into(), m.scale.to_string()),
            ("note".into(), m.note.clone()),
        ]
    }

    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        let meta = self.metadata_lines();
        match &self.rows {
            SweepRows::Supercritical(r) => records_to_csv(r, &meta),
            SweepRows::Ramsey(r) => records_to_csv(r, &meta),
        }
    }

    pub fn to_json(&self) -> Result<String, ExperimentError> {
        serde_json::to_string_pretty(self).map_err(|e| ExperimentError::Output(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_vertex_trial() {
        let cfg = SupercriticalConfig::new(1, 0.2).unwrap();
        let r = supercritical_trial(&cfg, 3).unwrap();
        assert_eq!((r.path_length, r.excess_final, r.max_u), (0, 0, 1));
        assert!(r.verdicts_consistent());
        assert!(SupercriticalConfig::new(10, 1.0).is_err());
        assert!(SupercriticalConfig::new(0, 0.1).is_err());
    }

    #[test]
    fn small_trials_are_audited_and_reproducible() {
        let cfg = SupercriticalConfig::new(400, 0.2).unwrap();
        for seed in 0..5 {
            let a = supercritical_trial(&cfg, seed).unwrap();
            assert!(a.verdicts_consistent());
            assert_eq!(a.audit_failures, 0);
            assert_eq!(a.s2_round_violations, 0);
            assert!(a.path_certified);
            assert_eq!(a.audit_rounds, a.rounds);
            assert_eq!(a, supercritical_trial(&cfg, seed).unwrap());
        }
    }

    #[test]
    fn strategies_cover_every_edge() {
        let g = sample_gnp(200, 0.05, 1).unwrap();
        for kind in StrategyKind::ALL {
            for k in [1, 2, 5] {
                let c = ColouringStrategy { kind, k, seed: 9 }.colour(&g);
                assert_eq!(c.colours().len(), g.m());
                assert!(c.colours().iter().all(|&x| x < k));
                let sizes = c.class_sizes();
                assert!(sizes[c.densest_class() as usize] * k as usize >= g.m());
            }
        }
        let g = Graph::path(4);
        let alt = ColouringStrategy {
            kind: StrategyKind::LabelAlternating,
            k: 2,
            seed: 0,
        }
        .colour(&g);
        assert_eq!(alt.colours(), &[1, 1, 1]);
    }

    #[test]
    fn greedy_balances_stars() {
        let g = Graph::star(10);
        let c = ColouringStrategy {
            kind: StrategyKind::GreedyBalance,
            k: 2,
            seed: 0,
        }
        .colour(&g);
        assert_eq!(c.class_sizes(), vec![5, 5]);
    }

    #[test]
    fn small_ramsey_trial() {
        let mut cfg = RamseyConfig::two_colour(3000, StrategyKind::UniformRandom, 1.0);
        cfg.params = Some(GuaranteeParams::new(3, 24, 5).unwrap());
        cfg.empirical = true;
        let t = ramsey_trial(&cfg, 4).unwrap();
        assert_eq!(t.record.status, "certified");
        assert!(t.record.certified);
        assert_eq!(t.record.path_length, Some(5));
        assert_eq!(t.record.empirical_certified, Some(true));
        assert!(t.record.empirical_length.unwrap() >= 5);
        assert!(t.record.edge_ok);
        assert!(t.record.class_edges * 2 >= t.record.host_edges);
    }

    #[test]
    fn sweep_config_parsing() {
        let text = r#"{
  "experiment": "supercritical",
  "grid": {"epsilon": [0.1, 0.2], "n": [300]},
  "seeds": 3
}"#;
        let cfg = parse_sweep_config(text).unwrap();
        assert_eq!(cfg.cells().len(), 2);
        let out = run_sweep(&cfg).unwrap();
        let SweepRows::Supercritical(rows) = &out.rows else { panic!() };
        assert_eq!(rows.len(), 6);
        assert_eq!(rows.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![0, 1, 2, 0, 1, 2]);
        assert_eq!(out.to_csv().unwrap(), run_sweep(&cfg).unwrap().to_csv().unwrap());

        let bad = "{\n  \"experiment\": \"supercritical\",\n  \"grid\": {\"strategy\": [\"uniform\"]},\n  \"seeds\": 1\n}";
        match parse_sweep_config(bad) {
            Err(ExperimentError::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_sweep_config("{\n  \"experiment\": \"nope\",\n  \"seeds\": 1\n}") {
            Err(ExperimentError::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_grid_has_header_only() {
        let cfg = parse_sweep_config(r#"{"experiment": "ramsey2", "grid": {"n": []}, "seeds": 4}"#).unwrap();
        let out = run_sweep(&cfg).unwrap();
        let csv = out.to_csv().unwrap();
        let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 1);
        assert!(data[0].starts_with("seed,n,k,"));
    }

    #[test]
    fn header_matches_fields() {
        let h = csv_header::<TrialRecord>();
        assert_eq!(h.first().map(String::as_str), Some("seed"));
        assert!(h.contains(&"s2_within_excess".to_string()));
        assert_eq!(csv_header::<RamseyTrialRecord>().len(), 27);
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }
}
