//! Immutable undirected simple graphs with edge-list I/O.
//!
//! Units are stored under dense 0-based internal ids; the external ids seen in
//! an input edge list are retained so that every emitted artifact speaks the
//! caller's id space. Adjacency rows are kept sorted, which gives O(log D)
//! membership tests to the incremental design updates built on top.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: self-loop {unit} -- {unit} is not allowed")]
    SelfLoop { line: usize, unit: u64 },
    #[error("line {line}: malformed edge line: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: unit {unit} is outside the declared range 0..{n}")]
    UnitOutsideHeader { line: usize, unit: u64, n: usize },
    #[error("unit index {unit} out of range for a graph with {n} units")]
    UnitOutOfRange { unit: usize, n: usize },
    #[error("self-loop on unit {0}")]
    SelfLoopEdge(usize),
}

/// Immutable undirected simple graph.
///
/// `adjacency[i]` is the ascending list of neighbors of internal unit `i`;
/// `external_ids[i]` is the id unit `i` had in the source edge list (the
/// identity mapping for generated graphs).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    external_ids: Vec<u64>,
}

impl Graph {
    /// Builds a graph over internal units `0..n` from an edge list.
    /// Duplicate edges collapse; self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoopEdge(u));
            }
            for unit in [u, v] {
                if unit >= n {
                    return Err(GraphError::UnitOutOfRange { unit, n });
                }
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for row in &mut adjacency {
            row.sort_unstable();
            row.dedup();
        }
        let external_ids = (0..n as u64).collect();
        Ok(Graph {
            adjacency,
            external_ids,
        })
    }

    /// Parses the text edge-list format.
    ///
    /// Each line is `u v` with nonnegative integer ids; `#` comments and blank
    /// lines are ignored. An optional header `nodes: N` fixes the unit count
    /// (ids then run over `0..N` and unnamed units stay isolated). Without a
    /// header, the ids that appear are remapped to dense indices in ascending
    /// order and the original ids are retained.
    pub fn load_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut declared_n: Option<usize> = None;
        let mut edges: Vec<(u64, u64, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens[0] == "nodes:" {
                if declared_n.is_some() {
                    return Err(GraphError::Malformed {
                        line: line_no,
                        reason: "duplicate nodes: header".into(),
                    });
                }
                if tokens.len() != 2 {
                    return Err(GraphError::Malformed {
                        line: line_no,
                        reason: "header must read `nodes: N`".into(),
                    });
                }
                let n = tokens[1].parse::<usize>().map_err(|_| GraphError::Malformed {
                    line: line_no,
                    reason: format!("invalid unit count {:?}", tokens[1]),
                })?;
                declared_n = Some(n);
                continue;
            }
            if tokens.len() != 2 {
                return Err(GraphError::Malformed {
                    line: line_no,
                    reason: format!("expected two ids, found {}", tokens.len()),
                });
            }
            let mut pair = [0u64; 2];
            for (slot, tok) in pair.iter_mut().zip(&tokens) {
                *slot = tok.parse::<u64>().map_err(|_| GraphError::Malformed {
                    line: line_no,
                    reason: format!("invalid unit id {tok:?}"),
                })?;
            }
            let (u, v) = (pair[0], pair[1]);
            if u == v {
                return Err(GraphError::SelfLoop { line: line_no, unit: u });
            }
            edges.push((u, v, line_no));
        }

        let (n, to_internal, external_ids) = match declared_n {
            Some(n) => {
                for &(u, v, line) in &edges {
                    for unit in [u, v] {
                        if unit >= n as u64 {
                            return Err(GraphError::UnitOutsideHeader { line, unit, n });
                        }
                    }
                }
                (n, None, (0..n as u64).collect::<Vec<_>>())
            }
            None => {
                let mut ids: Vec<u64> = edges
                    .iter()
                    .flat_map(|&(u, v, _)| [u, v])
                    .collect();
                ids.sort_unstable();
                ids.dedup();
                let map: HashMap<u64, usize> =
                    ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
                (ids.len(), Some(map), ids)
            }
        };

        let mut adjacency = vec![Vec::new(); n];
        for &(u, v, _) in &edges {
            let (iu, iv) = match &to_internal {
                Some(map) => (map[&u], map[&v]),
                None => (u as usize, v as usize),
            };
            adjacency[iu].push(iv);
            adjacency[iv].push(iu);
        }
        for row in &mut adjacency {
            row.sort_unstable();
            row.dedup();
        }
        Ok(Graph {
            adjacency,
            external_ids,
        })
    }

    /// Writes the edge list back out: each edge once with `u < v` (external
    /// ids), sorted, one per line. Graphs whose external ids are the identity
    /// get a `nodes: N` header so isolated units survive a round trip.
    pub fn emit_edge_list(&self) -> String {
        let mut out = String::new();
        let identity = self
            .external_ids
            .iter()
            .enumerate()
            .all(|(i, &ext)| ext == i as u64);
        if identity {
            let _ = writeln!(out, "nodes: {}", self.n());
        }
        for i in 0..self.n() {
            for &j in &self.adjacency[i] {
                if i < j {
                    let _ = writeln!(out, "{} {}", self.external_ids[i], self.external_ids[j]);
                }
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.iter().map(Vec::len)
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn is_isolated(&self, i: usize) -> bool {
        self.adjacency[i].is_empty()
    }

    pub fn isolated_count(&self) -> usize {
        self.adjacency.iter().filter(|row| row.is_empty()).count()
    }

    pub fn external_id(&self, i: usize) -> u64 {
        self.external_ids[i]
    }

    pub fn external_ids(&self) -> &[u64] {
        &self.external_ids
    }

    /// Internal index of an external id, if the unit exists.
    pub fn internal_id(&self, external: u64) -> Option<usize> {
        // External ids are ascending by construction (sorted remap or identity).
        self.external_ids.binary_search(&external).ok()
    }

    /// Units within shortest-path distance `d` of `i`, including `i` itself,
    /// found by breadth-first search. Sorted ascending.
    pub fn neighborhood_within(&self, i: usize, d: usize) -> Result<Vec<usize>, GraphError> {
        if i >= self.n() {
            return Err(GraphError::UnitOutOfRange { unit: i, n: self.n() });
        }
        let mut dist = vec![usize::MAX; self.n()];
        let mut queue = std::collections::VecDeque::new();
        dist[i] = 0;
        queue.push_back(i);
        let mut reached = vec![i];
        while let Some(u) = queue.pop_front() {
            if dist[u] == d {
                continue;
            }
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    reached.push(v);
                    queue.push_back(v);
                }
            }
        }
        reached.sort_unstable();
        Ok(reached)
    }
}
