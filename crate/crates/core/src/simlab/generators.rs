//! Random network generators for the simulation lab.

use std::collections::HashSet;

use rand::{Rng, RngExt};

use crate::graph::Graph;

/// Erdos-Renyi graph: every unordered pair is an edge independently with
/// probability `p`. Requires `p` strictly inside (0, 1).
pub fn gen_er<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
    assert!(p > 0.0 && p < 1.0, "edge probability must lie in (0, 1)");
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).expect("generated edges are simple")
}

/// Barabasi-Albert preferential attachment: a seed clique of `m + 1` units,
/// then each arriving unit attaches to `m` distinct existing units drawn with
/// probability proportional to current degree. Requires `1 <= m < n`.
pub fn gen_ba<R: Rng>(n: usize, m: usize, rng: &mut R) -> Graph {
    assert!(m >= 1 && n > m, "need 1 <= m < n");
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(m * n);
    // Every edge endpoint goes into this list, so sampling an element uniformly
    // samples a unit proportional to its degree.
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * m * n);
    for i in 0..=m {
        for j in (i + 1)..=m {
            edges.push((i, j));
            endpoints.push(i);
            endpoints.push(j);
        }
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    for v in (m + 1)..n {
        chosen.clear();
        while chosen.len() < m {
            let target = endpoints[rng.random_range(0..endpoints.len())];
            if !chosen.contains(&target) {
                chosen.push(target);
            }
        }
        for &u in &chosen {
            edges.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    Graph::from_edges(n, &edges).expect("generated edges are simple")
}

/// Community network: `communities` near-equal blocks, each a small-world
/// ring lattice (rewiring probability 0.1), joined by sparse independent
/// cross-community edges. The ring degree and cross probability are solved so
/// that the within-community edge probability is `ratio` times the
/// cross-community one while the overall average degree approximates
/// `target_avg_degree`. Returns the graph and a community-level covariate
/// `Z` (community index centered and scaled to unit variance).
pub fn gen_community<R: Rng>(
    n: usize,
    communities: usize,
    ratio: f64,
    target_avg_degree: f64,
    rng: &mut R,
) -> (Graph, Vec<f64>) {
    assert!(communities >= 2, "need at least two communities");
    assert!(ratio > 0.0 && target_avg_degree > 0.0);

    // Near-equal sizes: the first n % communities blocks take the remainder.
    let base = n / communities;
    let mut sizes = vec![base; communities];
    for block in sizes.iter_mut().take(n % communities) {
        *block += 1;
    }
    let mut community_of = vec![0usize; n];
    let mut starts = Vec::with_capacity(communities);
    let mut cursor = 0;
    for (idx, &s) in sizes.iter().enumerate() {
        starts.push(cursor);
        for u in cursor..cursor + s {
            community_of[u] = idx;
        }
        cursor += s;
    }

    // Ring degree k solves k * (1 + (n - s)/(ratio (s - 1))) = target with the
    // mean block size s, rounded to the nearest even lattice degree.
    let s_mean = n as f64 / communities as f64;
    let k_ideal = target_avg_degree / (1.0 + (n as f64 - s_mean) / (ratio * (s_mean - 1.0)));
    let s_min = *sizes.iter().min().unwrap();
    let k_cap = if s_min > 2 { ((s_min - 1) / 2) * 2 } else { 0 };
    let k = (2.0 * (k_ideal / 2.0).round()).max(2.0) as usize;
    let k = k.min(k_cap.max(2));
    let p_cross = (k as f64 / (ratio * (s_mean - 1.0))).clamp(0.0, 1.0);

    const REWIRE_PROB: f64 = 0.1;
    let mut edge_set: HashSet<(usize, usize)> = HashSet::new();
    let norm = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    for (idx, &s) in sizes.iter().enumerate() {
        if s < 2 {
            continue;
        }
        let start = starts[idx];
        let half = (k / 2).min((s - 1) / 2).max(if s >= 2 { 1 } else { 0 });
        for local in 0..s {
            for step in 1..=half {
                let u = start + local;
                let v = start + (local + step) % s;
                edge_set.insert(norm(u, v));
            }
        }
        // Watts-Strogatz rewiring: each lattice edge moves its far endpoint to
        // a uniform member of the same community with probability 0.1.
        for local in 0..s {
            for step in 1..=half {
                if rng.random::<f64>() >= REWIRE_PROB {
                    continue;
                }
                let u = start + local;
                let v = start + (local + step) % s;
                if !edge_set.contains(&norm(u, v)) {
                    continue;
                }
                for _ in 0..50 {
                    let t = start + rng.random_range(0..s);
                    if t != u && !edge_set.contains(&norm(u, t)) {
                        edge_set.remove(&norm(u, v));
                        edge_set.insert(norm(u, t));
                        break;
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if community_of[i] != community_of[j] && rng.random::<f64>() < p_cross {
                edge_set.insert((i, j));
            }
        }
    }
    let edges: Vec<(usize, usize)> = edge_set.into_iter().collect();
    let g = Graph::from_edges(n, &edges).expect("generated edges are simple");

    // Community index, centered and scaled to unit variance over the indices.
    let c = communities as f64;
    let mean = (c - 1.0) / 2.0;
    let sd = ((c * c - 1.0) / 12.0).sqrt();
    let z = community_of
        .iter()
        .map(|&idx| (idx as f64 - mean) / sd)
        .collect();
    (g, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng_from_seed;

    #[test]
    fn er_is_deterministic_per_seed() {
        let a = gen_er(80, 0.1, &mut rng_from_seed(5));
        let b = gen_er(80, 0.1, &mut rng_from_seed(5));
        let c = gen_er(80, 0.1, &mut rng_from_seed(6));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn er_mean_degree_concentrates() {
        let n = 500;
        let p = 15.0 / n as f64;
        let mut total = 0usize;
        let draws = 200;
        for seed in 0..draws {
            let g = gen_er(n, p, &mut rng_from_seed(seed));
            total += 2 * g.edge_count();
        }
        let mean_degree = total as f64 / (draws as usize * n) as f64;
        assert!(
            (mean_degree - 15.0).abs() < 1.0,
            "mean degree {mean_degree}"
        );
    }

    #[test]
    fn ba_edge_count_and_min_degree() {
        for &(n, m) in &[(50usize, 3usize), (200, 6), (35, 1)] {
            let g = gen_ba(n, m, &mut rng_from_seed(7));
            assert_eq!(g.edge_count(), m * (n - m - 1) + m * (m + 1) / 2);
            assert!(g.degrees().min().unwrap() >= m);
        }
    }

    #[test]
    fn ba_is_deterministic_per_seed() {
        let a = gen_ba(120, 4, &mut rng_from_seed(9));
        let b = gen_ba(120, 4, &mut rng_from_seed(9));
        assert_eq!(a, b);
    }

    #[test]
    fn community_z_takes_exactly_k_values() {
        let (g, z) = gen_community(203, 4, 8.0, 11.0, &mut rng_from_seed(3));
        assert_eq!(g.n(), 203);
        let mut distinct: Vec<u64> = z.iter().map(|v| v.to_bits()).collect();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct.len(), 4);
        // Standardized: mean 0, unit variance over the index values.
        let mut uniq: Vec<f64> = distinct.iter().map(|&b| f64::from_bits(b)).collect();
        uniq.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean: f64 = uniq.iter().sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn community_calibration() {
        // Average degree within 15% of target, and the pair-normalized
        // within:cross edge ratio within 25% of the requested ratio.
        let n = 1000;
        let target = 11.0;
        let ratio = 8.0;
        let draws = 100;
        let mut degree_total = 0.0;
        let mut within_edges = 0usize;
        let mut cross_edges = 0usize;
        let mut within_pairs = 0usize;
        let mut cross_pairs = 0usize;
        for seed in 0..draws {
            let (g, z) = gen_community(n, 4, ratio, target, &mut rng_from_seed(seed));
            degree_total += 2.0 * g.edge_count() as f64 / n as f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    let same = z[i] == z[j];
                    let has = g.has_edge(i, j);
                    if same {
                        within_pairs += 1;
                        within_edges += usize::from(has);
                    } else {
                        cross_pairs += 1;
                        cross_edges += usize::from(has);
                    }
                }
            }
        }
        let mean_degree = degree_total / draws as f64;
        assert!(
            (mean_degree - target).abs() / target < 0.15,
            "average degree {mean_degree}"
        );
        let p_within = within_edges as f64 / within_pairs as f64;
        let p_cross = cross_edges as f64 / cross_pairs as f64;
        let realized = p_within / p_cross;
        assert!(
            (realized - ratio).abs() / ratio < 0.25,
            "realized ratio {realized}"
        );
    }

    #[test]
    fn community_sizes_differ_by_at_most_one() {
        let (g, z) = gen_community(10, 4, 8.0, 3.0, &mut rng_from_seed(1));
        assert_eq!(g.n(), 10);
        let mut counts = std::collections::BTreeMap::new();
        for v in z {
            *counts.entry(v.to_bits()).or_insert(0usize) += 1;
        }
        let min = counts.values().min().unwrap();
        let max = counts.values().max().unwrap();
        assert!(max - min <= 1);
    }
}
