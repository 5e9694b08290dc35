//! Positive/negative training pairs for Siamese-style consumers.
//!
//! Positives are the mutual edges of the reduced graph. Each point `p` with
//! degree `d_p` also gets `d_p` negatives: the farthest entries of its
//! neighbor row that are not graph edges. When a row has fewer than `d_p`
//! such entries, the rest are drawn uniformly (seeded) from all non-adjacent
//! vertices.

use std::io::Write;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::Seed;
use crate::error::{Error, Result};
use crate::knn::NeighborTable;
use crate::reduce::ReducedGraph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    /// Each mutual edge once, `p < q`.
    pub positives: Vec<(usize, usize)>,
    /// `(anchor, other)` pairs, grouped by anchor in ascending order.
    pub negatives: Vec<(usize, usize)>,
    pub seed: Seed,
    /// Anchors whose row ran out of in-row negatives.
    pub exhausted: Vec<usize>,
}

impl PairSet {
    pub fn total(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }
}

/// One JSON-lines record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub p: usize,
    pub q: usize,
    pub label: u8,
}

pub fn export_pairs(g: &ReducedGraph, nt: &NeighborTable, seed: Seed) -> Result<PairSet> {
    if g.n() != nt.len() {
        return Err(Error::input(format!(
            "graph has {} vertices but neighbor table has {} rows",
            g.n(),
            nt.len()
        )));
    }
    let positives: Vec<(usize, usize)> = g.edges().map(|(p, q, _)| (p, q)).collect();
    let mut negatives = Vec::new();
    let mut exhausted = Vec::new();
    let mut rng = seed.rng();

    for p in 0..g.n() {
        let want = g.degree(p);
        if want == 0 {
            log::debug!("point {p} has no edges and contributes no pairs");
            continue;
        }
        let mut picked: Vec<usize> = nt
            .row_indices(p)
            .iter()
            .rev()
            .copied()
            .filter(|&q| !g.has_edge(p, q))
            .take(want)
            .collect();
        if picked.len() < want {
            exhausted.push(p);
            let pool: Vec<usize> = (0..g.n())
                .filter(|&q| q != p && !g.has_edge(p, q) && !picked.contains(&q))
                .collect();
            let extra = (want - picked.len()).min(pool.len());
            let mut chosen: Vec<usize> = index::sample(&mut rng, pool.len(), extra)
                .into_iter()
                .map(|i| pool[i])
                .collect();
            chosen.sort_unstable();
            picked.extend(chosen);
        }
        negatives.extend(picked.into_iter().map(|q| (p, q)));
    }
    Ok(PairSet {
        positives,
        negatives,
        seed,
        exhausted,
    })
}

pub fn write_pairs(pairs: &PairSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let records = pairs
        .positives
        .iter()
        .map(|&(p, q)| PairRecord { p, q, label: 1 })
        .chain(pairs.negatives.iter().map(|&(p, q)| PairRecord { p, q, label: 0 }));
    for r in records {
        let line = serde_json::to_string(&r).expect("pair records serialize");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_pairs(path: impl AsRef<Path>) -> Result<Vec<PairRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                row: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
