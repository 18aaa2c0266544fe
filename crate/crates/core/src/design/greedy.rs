//! Two-step greedy construction of ego-clusters.
//!
//! Step one selects egos backward from the all-singleton configuration: a
//! candidate ego is drawn at random, grouped with its still-unassigned
//! neighbors, and the cluster is kept only if it strictly lowers the design
//! objective. Step two keeps the egos fixed and reassigns alters that touch
//! several egos, again accepting only strict improvements. Both steps evaluate
//! moves through closed-form updates of `r_bar` and `b` that touch only the
//! moved units' neighborhoods, never a full recompute.

use rand::{Rng, RngExt};

use crate::graph::Graph;
use crate::seeds::rng_from_seed;

use super::{b_from_parts, objective, ClusterInfo, DesignError, DesignKind, EgoClustering};

/// Acceptance threshold: a move is taken only if the objective drops by more
/// than this, which makes the strict-decrease rule float-safe and bounds the
/// number of accepted moves.
fn acceptance_tol(obj: f64) -> f64 {
    f64::max(1e-12, 1e-12 * obj.abs())
}

/// Configuration for [`build_design_with`].
#[derive(Debug, Clone)]
pub struct DesignOptions {
    /// Objective weight in `(0, 1]`; 1 targets the global-effect variance
    /// alone, values toward 0 shift weight to the spillover variance.
    pub lambda: f64,
    /// Units forced to act as egos; their clusters are formed up front and
    /// claim all their currently-unassigned neighbors.
    pub predetermined_egos: Vec<usize>,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions {
            lambda: 1.0,
            predetermined_egos: Vec::new(),
        }
    }
}

impl DesignOptions {
    pub fn new(lambda: f64) -> Self {
        DesignOptions {
            lambda,
            ..Self::default()
        }
    }
}

/// Post-move statistics for reassigning alter `m` from its cluster `k1` to
/// cluster `k2`, computed in O(D_m) from the cached state without mutating
/// the clustering. Returns `(r_bar_star, b_star)`.
pub fn reassignment_delta(
    g: &Graph,
    c: &EgoClustering,
    m: usize,
    k1: usize,
    k2: usize,
) -> Result<(f64, f64), DesignError> {
    let (r_bar_star, _q_star, b_star) = delta_parts(g, c, m, k1, k2)?;
    Ok((r_bar_star, b_star))
}

fn delta_parts(
    g: &Graph,
    c: &EgoClustering,
    m: usize,
    k1: usize,
    k2: usize,
) -> Result<(f64, f64, f64), DesignError> {
    if c.is_ego(m) {
        return Err(DesignError::EgoImmovable(m));
    }
    if c.cluster_of(m) != k1 {
        return Err(DesignError::NotAMember { unit: m, cluster: k1 });
    }
    if k1 == k2 {
        return Err(DesignError::SameCluster(k1));
    }
    if !c.clusters().contains_key(&k2) {
        return Err(DesignError::UnknownCluster(k2));
    }
    // Cluster ids are ego unit ids, so adjacency to the ego is adjacency to k2.
    if !g.has_edge(m, k2) {
        return Err(DesignError::EgoNotAdjacent { unit: m, cluster: k2 });
    }

    let n = g.n() as f64;
    let mut inv_deg_k1 = 0.0; // Σ_{h ∈ E_k1 ∩ N_m} 1/D_h
    let mut inv_deg_k2 = 0.0;
    let mut count_k1 = 0usize; // |N_m ∩ E_k1|
    let mut count_k2 = 0usize;
    let mut q_step = 0.0; // Σ_{h ∈ N_m} (1/D_h² - (R_{h,k1} - R_{h,k2})/D_h)
    for &h in g.neighbors(m) {
        let d_h = g.degree(h) as f64;
        let e_h = c.cluster_of(h);
        if e_h == k1 {
            inv_deg_k1 += 1.0 / d_h;
            count_k1 += 1;
        } else if e_h == k2 {
            inv_deg_k2 += 1.0 / d_h;
            count_k2 += 1;
        }
        let r_h_k1 = c.neighbor_count(h, k1) as f64 / d_h;
        let r_h_k2 = c.neighbor_count(h, k2) as f64 / d_h;
        q_step += 1.0 / (d_h * d_h) - (r_h_k1 - r_h_k2) / d_h;
    }
    let d_m = g.degree(m) as f64;
    let r_bar_star =
        c.r_bar() + (inv_deg_k1 - inv_deg_k2 + (count_k1 as f64 - count_k2 as f64) / d_m) / n;
    let q_star = c.q() + 2.0 * q_step / n;
    let b_star = b_from_parts(q_star, r_bar_star, c.n_isolated(), g.n());
    Ok((r_bar_star, q_star, b_star))
}

/// Moves alter `m` into cluster `k2`, updating every cache in place. The
/// update touches only `m` and its neighbors.
pub fn apply_reassignment(
    g: &Graph,
    c: &mut EgoClustering,
    m: usize,
    k2: usize,
) -> Result<(), DesignError> {
    let k1 = c.cluster_of(m);
    let (r_bar_star, q_star, b_star) = delta_parts(g, c, m, k1, k2)?;
    let lambda = c.lambda();
    let n_isolated = c.n_isolated();

    let mut count_k1 = 0usize;
    let mut count_k2 = 0usize;
    {
        let (assignment, clusters, neighbor_counts, loss) = c.internals();
        for &h in g.neighbors(m) {
            let row = &mut neighbor_counts[h];
            match row.get_mut(&k1) {
                Some(v) if *v > 1 => *v -= 1,
                _ => {
                    row.remove(&k1);
                }
            }
            *row.entry(k2).or_insert(0) += 1;
            let inv_d_h = 1.0 / g.degree(h) as f64;
            if assignment[h] == k1 {
                loss[h] += inv_d_h;
                count_k1 += 1;
            } else if assignment[h] == k2 {
                loss[h] -= inv_d_h;
                count_k2 += 1;
            }
        }
        loss[m] += (count_k1 as f64 - count_k2 as f64) / g.degree(m) as f64;
        assignment[m] = k2;
        let from = clusters.get_mut(&k1).expect("source cluster is live");
        from.size -= 1;
        if from.size == 0 {
            // Unreachable for ego-clusters (egos never move), kept for safety.
            clusters.remove(&k1);
        }
        clusters.get_mut(&k2).expect("target cluster is live").size += 1;
    }
    debug_assert_eq!(n_isolated, c.n_isolated());
    let obj = objective(r_bar_star, b_star, lambda);
    c.set_aggregates(r_bar_star, q_star, b_star, obj);
    Ok(())
}

/// Scratch buffers for candidate evaluation in ego selection.
struct Scratch {
    count: Vec<usize>,
    touched: Vec<usize>,
    members: Vec<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            count: vec![0; n],
            touched: Vec::new(),
            members: Vec::new(),
        }
    }
}

struct CandidateEval {
    r_bar_star: f64,
    q_star: f64,
    b_star: f64,
    obj_new: f64,
}

/// Evaluates forming `ego`'s cluster from `ego` plus its unassigned neighbors.
/// Leaves the member list and per-unit counts in `scratch` for a subsequent
/// accept. Cost is O(Σ_{m ∈ cluster} D_m): only units within distance two of
/// the ego are touched.
fn eval_candidate(
    g: &Graph,
    c: &EgoClustering,
    ego: usize,
    formed: &[bool],
    scratch: &mut Scratch,
) -> CandidateEval {
    scratch.members.clear();
    scratch.members.push(ego);
    for &v in g.neighbors(ego) {
        if !formed[v] {
            scratch.members.push(v);
        }
    }
    for &m in &scratch.members {
        for &h in g.neighbors(m) {
            if scratch.count[h] == 0 {
                scratch.touched.push(h);
            }
            scratch.count[h] += 1;
        }
    }
    let n = g.n() as f64;
    let mut loss_drop = 0.0; // Σ_{m ∈ members} |N_m ∩ E| / D_m
    for &m in &scratch.members {
        if scratch.count[m] > 0 {
            loss_drop += scratch.count[m] as f64 / g.degree(m) as f64;
        }
    }
    let mut q_step = 0.0; // Σ_h (c_h² - c_h) / D_h²
    for &h in &scratch.touched {
        let c_h = scratch.count[h] as f64;
        let d_h = g.degree(h) as f64;
        q_step += (c_h * c_h - c_h) / (d_h * d_h);
    }
    let r_bar_star = c.r_bar() - loss_drop / n;
    let q_star = c.q() + q_step / n;
    let b_star = b_from_parts(q_star, r_bar_star, c.n_isolated(), g.n());
    let obj_new = objective(r_bar_star, b_star, c.lambda());
    CandidateEval {
        r_bar_star,
        q_star,
        b_star,
        obj_new,
    }
}

fn clear_scratch(scratch: &mut Scratch) {
    for &h in &scratch.touched {
        scratch.count[h] = 0;
    }
    scratch.touched.clear();
}

/// Commits the candidate held in `scratch`: merges the members' singleton
/// clusters into one cluster under the ego's id.
fn accept_candidate(
    g: &Graph,
    c: &mut EgoClustering,
    ego: usize,
    formed: &mut [bool],
    scratch: &Scratch,
    eval: &CandidateEval,
) {
    {
        let (assignment, clusters, neighbor_counts, loss) = c.internals();
        for &m in &scratch.members {
            for &h in g.neighbors(m) {
                neighbor_counts[h].remove(&m);
            }
        }
        for &h in &scratch.touched {
            if scratch.count[h] > 0 {
                neighbor_counts[h].insert(ego, scratch.count[h]);
            }
        }
        for &m in &scratch.members {
            clusters.remove(&m);
            assignment[m] = ego;
            if g.degree(m) > 0 {
                loss[m] = 1.0 - scratch.count[m] as f64 / g.degree(m) as f64;
            }
            formed[m] = true;
        }
        clusters.insert(
            ego,
            ClusterInfo {
                ego,
                size: scratch.members.len(),
            },
        );
    }
    c.set_aggregates(eval.r_bar_star, eval.q_star, eval.b_star, eval.obj_new);
}

fn select_egos_impl<R: Rng>(
    g: &Graph,
    c: &mut EgoClustering,
    rng: &mut R,
    formed: &mut [bool],
    on_accept: &mut dyn FnMut(f64),
) -> Result<(), DesignError> {
    if g.edge_count() == 0 {
        return Err(DesignError::NoEdges);
    }
    let mut scratch = Scratch::new(g.n());
    loop {
        // Each round re-offers every remaining candidate, including egos
        // rejected in earlier rounds: an acceptance changes the objective, so
        // previously rejected candidates may have become profitable.
        let mut node_pool: Vec<usize> = (0..g.n()).filter(|&u| !formed[u]).collect();
        let mut selected = false;
        while !node_pool.is_empty() {
            let idx = rng.random_range(0..node_pool.len());
            let ego = node_pool.swap_remove(idx);
            let eval = eval_candidate(g, c, ego, formed, &mut scratch);
            if eval.obj_new < c.objective_value() - acceptance_tol(c.objective_value()) {
                accept_candidate(g, c, ego, formed, &scratch, &eval);
                clear_scratch(&mut scratch);
                on_accept(eval.obj_new);
                selected = true;
                break;
            }
            clear_scratch(&mut scratch);
        }
        if !selected {
            return Ok(());
        }
    }
}

/// Ego selection: grows ego-clusters from the singleton configuration by
/// randomized greedy search, accepting only strict objective decreases.
/// Unselected units keep their singleton clusters. Clusters of size greater
/// than one are treated as already formed, so a partially built clustering
/// (predetermined egos) can be passed in.
pub fn select_egos<R: Rng>(
    g: &Graph,
    c: &mut EgoClustering,
    rng: &mut R,
) -> Result<(), DesignError> {
    let mut formed: Vec<bool> = (0..g.n())
        .map(|u| c.clusters()[&c.cluster_of(u)].size > 1)
        .collect();
    select_egos_impl(g, c, rng, &mut formed, &mut |_| {})
}

fn reassign_alters_impl<R: Rng>(
    g: &Graph,
    c: &mut EgoClustering,
    rng: &mut R,
    on_accept: &mut dyn FnMut(f64),
) {
    // Egos are fixed from here on, so eligibility is static: non-ego units
    // adjacent to at least two egos.
    let mut movable: Vec<(usize, Vec<usize>)> = (0..g.n())
        .filter(|&m| !c.is_ego(m))
        .filter_map(|m| {
            let adjacent_egos: Vec<usize> = g
                .neighbors(m)
                .iter()
                .copied()
                .filter(|&u| c.is_ego(u))
                .collect();
            (adjacent_egos.len() >= 2).then_some((m, adjacent_egos))
        })
        .collect();
    use rand::seq::SliceRandom;
    movable.shuffle(rng);

    loop {
        let mut moved_any = false;
        for (m, adjacent_egos) in &movable {
            for &k2 in adjacent_egos {
                let k1 = c.cluster_of(*m);
                if k2 == k1 {
                    continue;
                }
                let (r_bar_star, b_star) =
                    reassignment_delta(g, c, *m, k1, k2).expect("eligible move");
                let obj_new = objective(r_bar_star, b_star, c.lambda());
                if obj_new < c.objective_value() - acceptance_tol(c.objective_value()) {
                    apply_reassignment(g, c, *m, k2).expect("eligible move");
                    on_accept(obj_new);
                    moved_any = true;
                }
            }
        }
        if !moved_any {
            return;
        }
    }
}

/// Alter reassignment: sweeps the alters adjacent to two or more egos in a
/// fixed random order, moving each to an adjacent ego's cluster whenever that
/// strictly lowers the objective, until a full pass makes no move.
pub fn reassign_alters<R: Rng>(g: &Graph, c: &mut EgoClustering, rng: &mut R) {
    reassign_alters_impl(g, c, rng, &mut |_| {});
}

/// Full pipeline: singletons, ego selection, then alter reassignment, all
/// driven by one PRNG seeded with `seed`. Deterministic in `(g, options,
/// seed)`; the number of clusters is whatever the optimizer settles on.
pub fn build_design_with(
    g: &Graph,
    options: &DesignOptions,
    seed: u64,
) -> Result<EgoClustering, DesignError> {
    build_inner(g, options, seed, &mut |_| {})
}

/// [`build_design_with`] with default options and the given lambda.
pub fn build_design(g: &Graph, lambda: f64, seed: u64) -> Result<EgoClustering, DesignError> {
    build_inner(g, &DesignOptions::new(lambda), seed, &mut |_| {})
}

/// Like [`build_design_with`], additionally returning the objective value at
/// the start and after every accepted move, in order.
pub fn build_design_traced(
    g: &Graph,
    options: &DesignOptions,
    seed: u64,
) -> Result<(EgoClustering, Vec<f64>), DesignError> {
    let mut trace = Vec::new();
    let c = build_inner(g, options, seed, &mut |obj| trace.push(obj))?;
    Ok((c, trace))
}

fn build_inner(
    g: &Graph,
    options: &DesignOptions,
    seed: u64,
    on_accept: &mut dyn FnMut(f64),
) -> Result<EgoClustering, DesignError> {
    if !(options.lambda > 0.0 && options.lambda <= 1.0) {
        return Err(DesignError::InvalidLambda(options.lambda));
    }
    if g.edge_count() == 0 {
        return Err(DesignError::NoEdges);
    }
    let mut rng = rng_from_seed(seed);
    let mut c = EgoClustering::singleton(g, options.lambda);
    c.set_design(DesignKind::EgoCr);
    let mut formed = vec![false; g.n()];

    let mut scratch = Scratch::new(g.n());
    for &ego in &options.predetermined_egos {
        if ego >= g.n() || formed[ego] {
            return Err(DesignError::PredeterminedConflict(ego));
        }
        // Predetermined clusters form unconditionally.
        let eval = eval_candidate(g, &c, ego, &formed, &mut scratch);
        accept_candidate(g, &mut c, ego, &mut formed, &scratch, &eval);
        clear_scratch(&mut scratch);
    }
    drop(scratch);

    on_accept(c.objective_value());
    select_egos_impl(g, &mut c, &mut rng, &mut formed, on_accept)?;
    reassign_alters_impl(g, &mut c, &mut rng, on_accept);
    Ok(c)
}
