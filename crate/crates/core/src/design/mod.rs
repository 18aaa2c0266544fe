//! Ego-cluster partitions and their interference statistics.
//!
//! A clustering assigns every unit to exactly one ego-cluster: a focal unit
//! (the ego) plus a subset of its graph neighbors (the alters), so any two
//! members sit within graph distance two. Cluster ids are the ego's unit id.
//!
//! Alongside the assignment the type caches, per unit, the sparse counts of
//! neighbors per cluster, the loss rates `r_i` (share of a unit's neighbors
//! assigned outside its own cluster), their mean `r_bar`, and the dispersion
//! statistic `b` that drives both estimator variances. The greedy optimizer in
//! [`greedy`] maintains these caches incrementally; [`recompute_stats`]
//! rebuilds them from scratch and serves as the oracle the incremental path is
//! tested against.
//!
//! Isolated units get `r_i = 0`, contribute nothing to either term of `b`, and
//! still count in the denominator of `r_bar`.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::Graph;

pub mod baselines;
pub mod greedy;

pub use greedy::{
    apply_reassignment, build_design, build_design_traced, build_design_with, reassign_alters,
    reassignment_delta, select_egos, DesignOptions,
};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("graph has no edges: no interference structure to optimize")]
    NoEdges,
    #[error("lambda must lie in (0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("assignment length {got} does not match unit count {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("cluster {cluster} does not contain its ego unit")]
    EgoOutsideCluster { cluster: usize },
    #[error("unit {unit} is not adjacent to the ego of its cluster {cluster}")]
    AlterNotAdjacent { unit: usize, cluster: usize },
    #[error("unit {0} is an ego and egos are never reassigned")]
    EgoImmovable(usize),
    #[error("unit {unit} is not a member of cluster {cluster}")]
    NotAMember { unit: usize, cluster: usize },
    #[error("cluster {0} is not live")]
    UnknownCluster(usize),
    #[error("the ego of cluster {cluster} is not adjacent to unit {unit}")]
    EgoNotAdjacent { unit: usize, cluster: usize },
    #[error("source and target cluster are both {0}")]
    SameCluster(usize),
    #[error("predetermined ego {0} is repeated or already assigned")]
    PredeterminedConflict(usize),
    #[error("clustering file: {0}")]
    Parse(String),
    #[error("clustering file names unit {0}, which is not a graph unit")]
    UnknownUnit(u64),
    #[error("graph unit {0} is missing from the clustering file")]
    MissingUnit(u64),
}

/// Which procedure produced a clustering. `ThreeNet` and `External`
/// clusterings may hold members beyond the ego's neighborhood, so the
/// ego-adjacency check is relaxed for them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    EgoCr,
    Cr,
    ThreeNet,
    RandomEgo,
    External,
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DesignKind::EgoCr => "ego_cr",
            DesignKind::Cr => "cr",
            DesignKind::ThreeNet => "three_net",
            DesignKind::RandomEgo => "random_ego",
            DesignKind::External => "external",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterInfo {
    pub ego: usize,
    pub size: usize,
}

/// Raw rows of a clustering table, parsed without reference to any graph.
/// Used by file-based workflows (such as drawing treatments) that do not
/// have the edge list at hand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusteringRows {
    pub units: Vec<u64>,
    pub labels: Vec<u64>,
    pub egos: Vec<bool>,
}

impl ClusteringRows {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self, DesignError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim_end() == "unit\tcluster\tego" => {}
            _ => {
                return Err(DesignError::Parse(
                    "expected header `unit\\tcluster\\tego`".into(),
                ))
            }
        }
        let mut rows = ClusteringRows {
            units: Vec::new(),
            labels: Vec::new(),
            egos: Vec::new(),
        };
        for (idx, raw) in lines {
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(DesignError::Parse(format!(
                    "line {}: expected 3 tab-separated fields",
                    idx + 1
                )));
            }
            let unit: u64 = fields[0]
                .parse()
                .map_err(|_| DesignError::Parse(format!("line {}: bad unit id", idx + 1)))?;
            let label: u64 = fields[1]
                .parse()
                .map_err(|_| DesignError::Parse(format!("line {}: bad cluster id", idx + 1)))?;
            let ego = match fields[2] {
                "0" => false,
                "1" => true,
                _ => {
                    return Err(DesignError::Parse(format!(
                        "line {}: ego flag must be 0 or 1",
                        idx + 1
                    )))
                }
            };
            rows.units.push(unit);
            rows.labels.push(label);
            rows.egos.push(ego);
        }
        Ok(rows)
    }
}

/// Partition of the units into ego-clusters with cached statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoClustering {
    design: DesignKind,
    lambda: f64,
    /// `e(i)`: cluster id of unit `i`; ids are ego unit ids.
    assignment: Vec<usize>,
    clusters: BTreeMap<usize, ClusterInfo>,
    /// Row `i`: live cluster id -> |N_i ∩ E_k| (nonzero entries only).
    neighbor_counts: Vec<BTreeMap<usize, usize>>,
    /// Loss rate `r_i` per unit.
    loss: Vec<f64>,
    r_bar: f64,
    /// `q = (1/n) Σ_i Σ_k (|N_i ∩ E_k| / D_i)²`, the squared row mass of the
    /// interference matrix; `b` is derived from it (see [`b_from_parts`]).
    q: f64,
    b: f64,
    obj: f64,
    n_isolated: usize,
}

/// `b` from the cached aggregates. For graphs without isolated units this is
/// the identity `b = q - (1 - r_bar)²`; isolated units contribute nothing to
/// either term of `b` but stay in `r_bar`'s denominator, which adds the
/// correction `(n_iso/n)(1 - r_bar²)`.
pub fn b_from_parts(q: f64, r_bar: f64, n_isolated: usize, n: usize) -> f64 {
    let base = q - (1.0 - r_bar) * (1.0 - r_bar);
    if n_isolated == 0 {
        base
    } else {
        base + (n_isolated as f64 / n as f64) * (1.0 - r_bar * r_bar)
    }
}

/// Design objective `lambda * r_bar² / b + (1 - lambda) / b`.
///
/// Returns `+inf` when `b = 0`: the estimator variances are undefined there,
/// so such a configuration is never accepted by the optimizer.
pub fn objective(r_bar: f64, b: f64, lambda: f64) -> f64 {
    debug_assert!(lambda > 0.0 && lambda <= 1.0);
    if b <= 0.0 {
        return f64::INFINITY;
    }
    (lambda * r_bar * r_bar + (1.0 - lambda)) / b
}

struct FullStats {
    neighbor_counts: Vec<BTreeMap<usize, usize>>,
    loss: Vec<f64>,
    r_bar: f64,
    q: f64,
    b: f64,
}

/// Everything from first principles, with `b` evaluated from its two-term
/// definition (cross-cluster squared interference plus loss-rate variance)
/// rather than from the cached-identity route.
fn compute_full(g: &Graph, assignment: &[usize]) -> FullStats {
    let n = g.n();
    let nf = n as f64;
    let mut neighbor_counts: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); n];
    let mut loss = vec![0.0; n];
    for i in 0..n {
        let row = &mut neighbor_counts[i];
        for &j in g.neighbors(i) {
            *row.entry(assignment[j]).or_insert(0) += 1;
        }
        let d = g.degree(i);
        if d > 0 {
            let own = row.get(&assignment[i]).copied().unwrap_or(0);
            loss[i] = 1.0 - own as f64 / d as f64;
        }
    }
    let r_bar = loss.iter().sum::<f64>() / nf;
    let mut q = 0.0;
    let mut cross = 0.0;
    let mut spread = 0.0;
    for i in 0..n {
        let d = g.degree(i);
        if d == 0 {
            continue;
        }
        let df = d as f64;
        for (&k, &count) in &neighbor_counts[i] {
            let share = count as f64 / df;
            q += share * share;
            if k != assignment[i] {
                cross += share * share;
            }
        }
        spread += (loss[i] - r_bar) * (loss[i] - r_bar);
    }
    FullStats {
        neighbor_counts,
        loss,
        r_bar,
        q: q / nf,
        b: (cross + spread) / nf,
    }
}

/// Recomputes `(loss, r_bar, b)` for a clustering from first principles,
/// ignoring every cache. This is the oracle the incremental updates in
/// [`greedy`] are validated against; it works off scratch arrays rather than
/// the cached sparse rows, so it stays cheap enough to call in bulk.
pub fn recompute_stats(g: &Graph, c: &EgoClustering) -> (Vec<f64>, f64, f64) {
    let assignment = &c.assignment;
    let n = g.n();
    let nf = n as f64;
    let mut count = vec![0usize; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut loss = vec![0.0; n];
    let mut per_unit_cross = vec![0.0; n];
    for i in 0..n {
        let d = g.degree(i);
        if d == 0 {
            continue;
        }
        for &j in g.neighbors(i) {
            let k = assignment[j];
            if count[k] == 0 {
                touched.push(k);
            }
            count[k] += 1;
        }
        let df = d as f64;
        let own = assignment[i];
        loss[i] = 1.0 - count[own] as f64 / df;
        let mut cross = 0.0;
        for &k in &touched {
            if k != own {
                let share = count[k] as f64 / df;
                cross += share * share;
            }
            count[k] = 0;
        }
        touched.clear();
        per_unit_cross[i] = cross;
    }
    let r_bar = loss.iter().sum::<f64>() / nf;
    let mut b = 0.0;
    for i in 0..n {
        if g.degree(i) == 0 {
            continue;
        }
        b += per_unit_cross[i] + (loss[i] - r_bar) * (loss[i] - r_bar);
    }
    (loss, r_bar, b / nf)
}

impl EgoClustering {
    /// Every unit its own ego-cluster (complete randomization).
    pub fn singleton(g: &Graph, lambda: f64) -> Self {
        let assignment: Vec<usize> = (0..g.n()).collect();
        Self::from_assignment_unchecked(g, assignment, DesignKind::Cr, lambda)
    }

    /// Builds a clustering from an explicit assignment, validating structure.
    ///
    /// Cluster ids must be ego unit ids (`assignment[k] == k` for every used
    /// id `k`). Unless the design kind relaxes it, each non-ego member must be
    /// a graph neighbor of its ego.
    pub fn from_assignment(
        g: &Graph,
        assignment: Vec<usize>,
        design: DesignKind,
        lambda: f64,
    ) -> Result<Self, DesignError> {
        if assignment.len() != g.n() {
            return Err(DesignError::LengthMismatch {
                got: assignment.len(),
                expected: g.n(),
            });
        }
        let relax = matches!(design, DesignKind::ThreeNet | DesignKind::External);
        for (i, &k) in assignment.iter().enumerate() {
            if k >= g.n() || assignment[k] != k {
                return Err(DesignError::EgoOutsideCluster { cluster: k });
            }
            if !relax && i != k && !g.has_edge(i, k) {
                return Err(DesignError::AlterNotAdjacent { unit: i, cluster: k });
            }
        }
        Ok(Self::from_assignment_unchecked(g, assignment, design, lambda))
    }

    fn from_assignment_unchecked(
        g: &Graph,
        assignment: Vec<usize>,
        design: DesignKind,
        lambda: f64,
    ) -> Self {
        let full = compute_full(g, &assignment);
        let mut clusters: BTreeMap<usize, ClusterInfo> = BTreeMap::new();
        for &k in &assignment {
            clusters
                .entry(k)
                .or_insert(ClusterInfo { ego: k, size: 0 })
                .size += 1;
        }
        let n_isolated = g.isolated_count();
        let obj = objective(full.r_bar, full.b, lambda);
        EgoClustering {
            design,
            lambda,
            assignment,
            clusters,
            neighbor_counts: full.neighbor_counts,
            loss: full.loss,
            r_bar: full.r_bar,
            q: full.q,
            b: full.b,
            obj,
            n_isolated,
        }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// Number of live clusters, `K_n`.
    pub fn k_n(&self) -> usize {
        self.clusters.len()
    }

    pub fn design(&self) -> DesignKind {
        self.design
    }

    pub(crate) fn set_design(&mut self, design: DesignKind) {
        self.design = design;
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn is_ego(&self, i: usize) -> bool {
        self.assignment[i] == i
    }

    /// Live clusters in ascending id order.
    pub fn clusters(&self) -> &BTreeMap<usize, ClusterInfo> {
        &self.clusters
    }

    pub fn loss(&self) -> &[f64] {
        &self.loss
    }

    pub fn r_bar(&self) -> f64 {
        self.r_bar
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn objective_value(&self) -> f64 {
        self.obj
    }

    /// `|N_i ∩ E_k|` from the cache (0 when the cluster has none of `i`'s
    /// neighbors).
    pub fn neighbor_count(&self, i: usize, cluster: usize) -> usize {
        self.neighbor_counts[i].get(&cluster).copied().unwrap_or(0)
    }

    pub(crate) fn internals(
        &mut self,
    ) -> (
        &mut Vec<usize>,
        &mut BTreeMap<usize, ClusterInfo>,
        &mut Vec<BTreeMap<usize, usize>>,
        &mut Vec<f64>,
    ) {
        (
            &mut self.assignment,
            &mut self.clusters,
            &mut self.neighbor_counts,
            &mut self.loss,
        )
    }

    pub(crate) fn set_aggregates(&mut self, r_bar: f64, q: f64, b: f64, obj: f64) {
        self.r_bar = r_bar;
        self.q = q;
        self.b = b;
        self.obj = obj;
    }

    pub(crate) fn q(&self) -> f64 {
        self.q
    }

    pub(crate) fn n_isolated(&self) -> usize {
        self.n_isolated
    }

    /// Clustering table: `unit<TAB>cluster<TAB>ego`, one row per unit in
    /// ascending external-id order. Cluster labels are the ego's external id.
    pub fn to_tsv(&self, g: &Graph) -> String {
        let mut out = String::from("unit\tcluster\tego\n");
        for i in 0..self.n() {
            let k = self.assignment[i];
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                g.external_id(i),
                g.external_id(k),
                u8::from(self.is_ego(i))
            );
        }
        out
    }

    /// Design-statistics sidecar table.
    pub fn stats_tsv(&self, seed: Option<u64>) -> String {
        let seed = seed.map_or_else(|| "-".to_string(), |s| s.to_string());
        format!(
            "K_n\tr_bar\tb_n\tobjective\tlambda\tseed\tdesign\n{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            self.k_n(),
            self.r_bar,
            self.b,
            self.obj,
            self.lambda,
            seed,
            self.design
        )
    }

    /// Parses a clustering table against a graph. The unit set must match the
    /// graph exactly; each cluster must designate exactly one ego row.
    pub fn parse_tsv(g: &Graph, text: &str) -> Result<Self, DesignError> {
        let rows = ClusteringRows::parse(text)?;
        let mut seen = vec![false; g.n()];
        // label -> (members, ego unit)
        let mut groups: BTreeMap<u64, (Vec<usize>, Option<usize>)> = BTreeMap::new();
        for row in 0..rows.len() {
            let unit = rows.units[row];
            let internal = g.internal_id(unit).ok_or(DesignError::UnknownUnit(unit))?;
            if seen[internal] {
                return Err(DesignError::Parse(format!("unit {unit} appears twice")));
            }
            seen[internal] = true;
            let entry = groups
                .entry(rows.labels[row])
                .or_insert_with(|| (Vec::new(), None));
            entry.0.push(internal);
            if rows.egos[row] {
                if entry.1.is_some() {
                    return Err(DesignError::Parse(format!(
                        "cluster {} designates more than one ego",
                        rows.labels[row]
                    )));
                }
                entry.1 = Some(internal);
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(DesignError::MissingUnit(g.external_id(missing)));
        }
        let mut assignment = vec![0usize; g.n()];
        for (label, (members, ego)) in groups {
            let ego = ego.ok_or_else(|| {
                DesignError::Parse(format!("cluster {label} designates no ego"))
            })?;
            for member in members {
                assignment[member] = ego;
            }
        }
        Self::from_assignment(g, assignment, DesignKind::External, 1.0)
    }

    /// Structural + cache consistency check, used by tests and debug builds.
    /// Verifies the partition, ego membership and adjacency (where the design
    /// demands it), row sums, loss rates, and that the cached aggregates match
    /// a full recompute within `tol`.
    pub fn validate(&self, g: &Graph, tol: f64) -> Result<(), String> {
        let n = self.n();
        if n != g.n() {
            return Err("unit count mismatch".into());
        }
        let relax = matches!(self.design, DesignKind::ThreeNet | DesignKind::External);
        let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..n {
            let k = self.assignment[i];
            *sizes.entry(k).or_insert(0) += 1;
            if self.assignment[k] != k {
                return Err(format!("cluster {k} does not contain its ego"));
            }
            if !relax && i != k && !g.has_edge(i, k) {
                return Err(format!("unit {i} is not adjacent to its ego {k}"));
            }
        }
        if sizes.len() != self.clusters.len() {
            return Err("cluster registry size mismatch".into());
        }
        for (k, info) in &self.clusters {
            if sizes.get(k) != Some(&info.size) {
                return Err(format!("cluster {k} has stale size"));
            }
            if info.ego != *k {
                return Err(format!("cluster {k} has ego {}", info.ego));
            }
        }
        for i in 0..n {
            let d = g.degree(i);
            let row_sum: usize = self.neighbor_counts[i].values().sum();
            if row_sum != d {
                return Err(format!("row {i} sums to {row_sum}, degree is {d}"));
            }
            for (&k, &count) in &self.neighbor_counts[i] {
                if count == 0 || !self.clusters.contains_key(&k) {
                    return Err(format!("row {i} references dead cluster {k}"));
                }
            }
            if !(-1e-12..=1.0 + 1e-12).contains(&self.loss[i]) {
                return Err(format!("loss[{i}] = {} out of range", self.loss[i]));
            }
        }
        let (loss, r_bar, b) = recompute_stats(g, self);
        for i in 0..n {
            if (loss[i] - self.loss[i]).abs() > tol {
                return Err(format!("loss[{i}] cached {} != {}", self.loss[i], loss[i]));
            }
        }
        if (r_bar - self.r_bar).abs() > tol {
            return Err(format!("r_bar cached {} != {}", self.r_bar, r_bar));
        }
        if (b - self.b).abs() > tol {
            return Err(format!("b cached {} != {}", self.b, b));
        }
        Ok(())
    }
}
