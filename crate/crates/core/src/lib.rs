//! Long induced paths via a modified depth-first search.
//!
//! The search keeps four vertex sets: unvisited `T`, the stack `U`, and two
//! discard piles `S1`/`S2`. A vertex found from the top of the stack is pushed
//! only if it sees no other stack vertex, so the stack is always an induced
//! path. Around that engine the crate provides exact small-instance oracles,
//! guarantee checkers for locally sparse expanding graphs, union-bound
//! evaluators and seeded random-graph experiments.

pub mod audit;
pub mod bounds;
pub mod dfs;
pub mod experiments;
pub mod graph;
pub mod guarantees;
pub mod oracle;
pub mod source;

pub use audit::{audit_invariants, AuditReport, Auditor};
pub use dfs::{
    dfs_init, dfs_round, dfs_run, dfs_run_observed, DfsError, DfsState, Place, RunOptions, RunRecord,
    StepTag, StopReason, StopRule, VertexOrdering,
};
pub use graph::{
    excess, external_neighbourhood, induced_subgraph, is_path_in_gprime_induced_in_g, prune_min_degree,
    Graph, GraphError, Vertex, VertexSet,
};
pub use source::{sample_gnp, BernoulliStream, QueryContext, QuerySource, SourceError, GENERATOR_NAME};
pub use experiments::{
    ramsey2_trial, ramsey_trial, ramseyk_trial, run_sweep, supercritical_run, supercritical_trial, ColouringStrategy,
    ExperimentError, OrderingMode, RamseyConfig, RamseyTrialRecord, StrategyKind, SupercriticalConfig, SweepConfig,
    TrialRecord,
};
pub use guarantees::{
    find_induced_path_guaranteed, ramsey_pipeline, EdgeColouring, GuaranteeError, GuaranteeParams, PipelineMode,
    PipelineOutcome, PipelineReport,
};
pub use oracle::{longest_gprime_path_induced_in_g_exact, longest_induced_path_exact, OracleError, PathWitness};
