//! Design, randomization, and analysis of network experiments under
//! interference.
//!
//! The toolkit partitions a network into ego-clusters (a focal unit plus a
//! subset of its neighbors), randomizes treatment at the cluster level, and
//! estimates the global treatment effect and the spillover effect by
//! regression, with standard errors driven by the clustering's interference
//! statistics. The clustering itself is optimized by a greedy two-step search
//! that minimizes the asymptotic estimator variance. A simulation lab
//! replays the whole pipeline across thousands of seeded replications to
//! measure bias, RMSE, test size, power, and interval coverage.
//!
//! Modules:
//! - [`graph`]: immutable simple graphs, edge-list I/O, BFS neighborhoods.
//! - [`design`]: ego-cluster partitions, their statistics, the greedy
//!   optimizer, and baseline designs.
//! - [`randomize`]: cluster-level coin flips and exposure computation.
//! - [`inference`]: regression fit, asymptotic standard errors, tests,
//!   confidence intervals, dependency-graph diagnostics.
//! - [`simlab`]: network generators, outcome simulation, replication engine.
//! - [`normal`]: standard normal CDF/quantile.
//! - [`seeds`]: deterministic seed derivation.

pub mod design;
pub mod graph;
pub mod inference;
pub mod normal;
pub mod randomize;
pub mod seeds;
pub mod simlab;

pub use design::{
    build_design, build_design_with, objective, recompute_stats, ClusteringRows, DesignError,
    DesignKind, DesignOptions, EgoClustering,
};
pub use graph::{Graph, GraphError};
pub use inference::{
    dependency_diagnostics, effect_inference, fit_ols, DependencyDiagnostics, EstimationResult,
    InferenceError, OlsFit,
};
pub use normal::{normal_cdf, normal_quantile};
pub use randomize::{assign, exposures, RandomizeError, TreatmentAssignment};
pub use seeds::{mix_seed, rng_from_seed, splitmix64};
pub use simlab::{
    emit_report, run_study, ReportFormat, SimConfig, SimError, SimReport,
};
