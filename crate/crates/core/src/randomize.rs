//! Cluster-level treatment assignment and exposure computation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, RngExt};
use thiserror::Error;

use crate::design::EgoClustering;
use crate::graph::Graph;

#[derive(Debug, Error)]
pub enum RandomizeError {
    #[error("treatment vector has length {got}, graph has {expected} units")]
    LengthMismatch { got: usize, expected: usize },
    #[error("assignment file: {0}")]
    Parse(String),
    #[error("assignment file names unit {0}, which is not a graph unit")]
    UnknownUnit(u64),
    #[error("graph unit {0} is missing from the assignment file")]
    MissingUnit(u64),
}

/// A realized cluster-level randomization: one fair-coin draw per cluster and
/// the induced unit-level treatment vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreatmentAssignment {
    pub cluster_draws: BTreeMap<usize, bool>,
    pub treatments: Vec<bool>,
    pub n_treated: usize,
    pub n_control: usize,
}

/// Draws one independent Bernoulli(1/2) bit per live cluster, in ascending
/// cluster-id order, and propagates each cluster's bit to its members.
pub fn assign<R: Rng>(c: &EgoClustering, rng: &mut R) -> TreatmentAssignment {
    let mut cluster_draws = BTreeMap::new();
    for &k in c.clusters().keys() {
        cluster_draws.insert(k, rng.random::<bool>());
    }
    let treatments: Vec<bool> = (0..c.n()).map(|i| cluster_draws[&c.cluster_of(i)]).collect();
    let n_treated = treatments.iter().filter(|&&t| t).count();
    TreatmentAssignment {
        cluster_draws,
        n_control: treatments.len() - n_treated,
        treatments,
        n_treated,
    }
}

/// Draws treatments for a clustering table parsed without the graph: one
/// Bernoulli(1/2) bit per distinct cluster label, in ascending label order
/// (labels are external ego ids, so this matches [`assign`] on the loaded
/// clustering). Returns the rendered assignment table.
pub fn assign_rows_tsv<R: Rng>(rows: &crate::design::ClusteringRows, rng: &mut R) -> String {
    let mut labels: Vec<u64> = rows.labels.clone();
    labels.sort_unstable();
    labels.dedup();
    let draws: BTreeMap<u64, bool> = labels
        .into_iter()
        .map(|label| (label, rng.random::<bool>()))
        .collect();
    let mut out = String::from("unit\ttreatment\n");
    for row in 0..rows.len() {
        let _ = writeln!(
            out,
            "{}\t{}",
            rows.units[row],
            u8::from(draws[&rows.labels[row]])
        );
    }
    out
}

/// Exposure `rho_i`: the fraction of `i`'s neighbors that are treated.
/// Isolated units get exposure 0.
pub fn exposures(g: &Graph, treatments: &[bool]) -> Result<Vec<f64>, RandomizeError> {
    if treatments.len() != g.n() {
        return Err(RandomizeError::LengthMismatch {
            got: treatments.len(),
            expected: g.n(),
        });
    }
    Ok((0..g.n())
        .map(|i| {
            let d = g.degree(i);
            if d == 0 {
                return 0.0;
            }
            let treated = g.neighbors(i).iter().filter(|&&j| treatments[j]).count();
            treated as f64 / d as f64
        })
        .collect())
}

/// Assignment table: `unit<TAB>treatment` in ascending external-id order.
pub fn assignment_tsv(g: &Graph, t: &TreatmentAssignment) -> String {
    let mut out = String::from("unit\ttreatment\n");
    for (i, &bit) in t.treatments.iter().enumerate() {
        let _ = writeln!(out, "{}\t{}", g.external_id(i), u8::from(bit));
    }
    out
}

/// Exposure table: `unit<TAB>rho` at full precision.
pub fn exposures_tsv(g: &Graph, rho: &[f64]) -> String {
    let mut out = String::from("unit\trho\n");
    for (i, value) in rho.iter().enumerate() {
        let _ = writeln!(out, "{}\t{}", g.external_id(i), value);
    }
    out
}

/// Parses an assignment table; the unit set must match the graph exactly.
pub fn parse_assignment_tsv(g: &Graph, text: &str) -> Result<Vec<bool>, RandomizeError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == "unit\ttreatment" => {}
        _ => {
            return Err(RandomizeError::Parse(
                "expected header `unit\\ttreatment`".into(),
            ))
        }
    }
    let mut treatments = vec![None; g.n()];
    for (idx, raw) in lines {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let unit: u64 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| RandomizeError::Parse(format!("line {}: bad unit id", idx + 1)))?;
        let bit = match fields.next() {
            Some("0") => false,
            Some("1") => true,
            _ => {
                return Err(RandomizeError::Parse(format!(
                    "line {}: treatment must be 0 or 1",
                    idx + 1
                )))
            }
        };
        if fields.next().is_some() {
            return Err(RandomizeError::Parse(format!(
                "line {}: expected 2 fields",
                idx + 1
            )));
        }
        let internal = g.internal_id(unit).ok_or(RandomizeError::UnknownUnit(unit))?;
        if treatments[internal].replace(bit).is_some() {
            return Err(RandomizeError::Parse(format!("unit {unit} appears twice")));
        }
    }
    if let Some(missing) = treatments.iter().position(Option::is_none) {
        return Err(RandomizeError::MissingUnit(g.external_id(missing)));
    }
    Ok(treatments.into_iter().map(Option::unwrap).collect())
}
