//! Locally scaled affinities, per-row adaptive thresholds and mutual
//! agreement.

use ndarray::Array2;
use rayon::prelude::*;

use crate::data::PointSet;
use crate::error::{Error, Result};
use crate::knn::{build_knn, NeighborTable};
use crate::scale::{compute_scales, LocalScales};

/// `exp(-d² / (σ_p σ_q))`.
pub fn affinity(d: f64, sigma_p: f64, sigma_q: f64) -> Result<f64> {
    if !(sigma_p.is_finite() && sigma_p > 0.0 && sigma_q.is_finite() && sigma_q > 0.0) {
        return Err(Error::input(format!(
            "local scales must be positive and finite, got {sigma_p} and {sigma_q}"
        )));
    }
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::input(format!("distance must be finite and non-negative, got {d}")));
    }
    Ok((-(d * d) / (sigma_p * sigma_q)).exp())
}

/// Affinity of every neighbor-table cell, same shape as the table.
pub fn affinity_rows(nt: &NeighborTable, ls: &LocalScales) -> Result<Array2<f64>> {
    if ls.len() != nt.len() {
        return Err(Error::input(format!(
            "{} local scales for a {}-row neighbor table",
            ls.len(),
            nt.len()
        )));
    }
    let mut out = Array2::zeros(nt.distances().dim());
    for ((p, j), a) in out.indexed_iter_mut() {
        let q = nt.indices()[[p, j]];
        *a = affinity(nt.distances()[[p, j]], ls.sigma[p], ls.sigma[q])?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Row max cleared `μ + s`; threshold is `μ + s`.
    High,
    /// Threshold is `μ - s`.
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowThreshold {
    pub mu: f64,
    pub sd: f64,
    pub t: f64,
    pub branch: Branch,
}

/// Adaptive cutoff for one affinity row.
///
/// With μ and s the mean and population standard deviation of the row, the
/// threshold is `μ + s` when `max > μ + s` (strict) and `μ - s` otherwise.
/// Entries `>= t` are kept. If rounding ever empties the row, its maximum is
/// kept.
pub fn threshold_row(row: &[f64]) -> (Vec<usize>, RowThreshold) {
    assert!(!row.is_empty(), "threshold_row needs a non-empty row");
    let n = row.len() as f64;
    let mu = row.iter().sum::<f64>() / n;
    let sd = (row.iter().map(|a| (a - mu) * (a - mu)).sum::<f64>() / n).sqrt();
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let (t, branch) = if max > mu + sd {
        (mu + sd, Branch::High)
    } else {
        (mu - sd, Branch::Low)
    };
    let mut kept: Vec<usize> = (0..row.len()).filter(|&j| row[j] >= t).collect();
    if kept.is_empty() {
        let argmax = (0..row.len())
            .max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)))
            .expect("row is non-empty");
        log::warn!("row threshold {t} removed every entry; keeping the maximum");
        kept.push(argmax);
    }
    (kept, RowThreshold { mu, sd, t, branch })
}

/// Symmetric sparse graph. Adjacency lists are sorted by neighbor id.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedGraph {
    n: usize,
    adjacency: Vec<Vec<(usize, f64)>>,
    directed: Vec<Vec<(usize, f64)>>,
}

impl ReducedGraph {
    /// Builds a graph from undirected edges `(p, q, w)`; each pair at most once.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for (p, q, w) in edges {
            if p >= n || q >= n {
                return Err(Error::input(format!("edge ({p}, {q}) outside a {n}-vertex graph")));
            }
            if p == q {
                return Err(Error::input(format!("self-loop at vertex {p}")));
            }
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::input(format!("edge ({p}, {q}) weight {w} outside (0, 1]")));
            }
            adjacency[p].push((q, w));
            adjacency[q].push((p, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|e| e.0);
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::input("duplicate edge"));
            }
        }
        Ok(Self {
            n,
            directed: adjacency.clone(),
            adjacency,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, p: usize) -> &[(usize, f64)] {
        &self.adjacency[p]
    }

    pub fn degree(&self, p: usize) -> usize {
        self.adjacency[p].len()
    }

    /// Row survivors before mutual agreement, for diagnostics.
    pub fn directed_survivors(&self) -> &[Vec<(usize, f64)>] {
        &self.directed
    }

    pub fn has_edge(&self, p: usize, q: usize) -> bool {
        self.weight(p, q).is_some()
    }

    pub fn weight(&self, p: usize, q: usize) -> Option<f64> {
        let list = &self.adjacency[p];
        list.binary_search_by_key(&q, |e| e.0).ok().map(|i| list[i].1)
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges with `p < q`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(p, list)| list.iter().filter(move |e| e.0 > p).map(move |&(q, w)| (p, q, w)))
    }

    /// Connected-component id per vertex, ids in order of first appearance.
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.n);
        for (p, q, _) in self.edges() {
            uf.union(p, q);
        }
        let mut ids = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut out = vec![0; self.n];
        for (v, slot) in out.iter_mut().enumerate() {
            let root = uf.find(v);
            if ids[root] == usize::MAX {
                ids[root] = next;
                next += 1;
            }
            *slot = ids[root];
        }
        out
    }

    pub fn n_components(&self) -> usize {
        self.components().iter().max().map_or(0, |m| m + 1)
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Keeps `(p, q)` only when both `(p, q)` and `(q, p)` survived.
///
/// `directed[p]` lists `(q, A_pq)` pairs that passed p's threshold. Mutual
/// edges store the weight from the lower-id endpoint's row on both sides.
pub fn mutualize(n: usize, directed: Vec<Vec<(usize, f64)>>) -> Result<ReducedGraph> {
    if directed.len() != n {
        return Err(Error::input(format!("{} survivor rows for {n} vertices", directed.len())));
    }
    let mut directed = directed;
    for (p, row) in directed.iter_mut().enumerate() {
        if row.iter().any(|&(q, _)| q >= n || q == p) {
            return Err(Error::input(format!("survivor row {p} references itself or an unknown vertex")));
        }
        row.sort_by_key(|e| e.0);
        row.dedup_by_key(|e| e.0);
    }
    let contains = |p: usize, q: usize| directed[p].binary_search_by_key(&q, |e| e.0).is_ok();
    let mut adjacency = vec![Vec::new(); n];
    for p in 0..n {
        for &(q, w) in &directed[p] {
            if q > p && contains(q, p) {
                adjacency[p].push((q, w));
                adjacency[q].push((p, w));
            }
        }
    }
    for list in &mut adjacency {
        list.sort_by_key(|e| e.0);
    }
    Ok(ReducedGraph {
        n,
        adjacency,
        directed,
    })
}

/// Directed survivors of every row threshold.
pub fn threshold_rows(nt: &NeighborTable, affinities: &Array2<f64>) -> Vec<Vec<(usize, f64)>> {
    (0..nt.len())
        .into_par_iter()
        .map(|p| {
            let row = affinities.row(p);
            let (kept, _) = threshold_row(row.as_slice().expect("rows are contiguous"));
            kept.into_iter().map(|j| (nt.indices()[[p, j]], row[j])).collect()
        })
        .collect()
}

/// The reduction end to end on a prebuilt neighbor table.
pub fn reduce_table(nt: &NeighborTable) -> Result<ReducedGraph> {
    reduce_with_scales(nt, &compute_scales(nt)?)
}

/// The reduction with caller-supplied local scales.
pub fn reduce_with_scales(nt: &NeighborTable, scales: &LocalScales) -> Result<ReducedGraph> {
    let affinities = affinity_rows(nt, scales)?;
    mutualize(nt.len(), threshold_rows(nt, &affinities))
}

/// k-NN table, local scales, affinities, row thresholds and mutual agreement.
pub fn reduce_graph(ps: &PointSet, k_max: usize) -> Result<ReducedGraph> {
    reduce_table(&build_knn(ps, k_max)?)
}

/// Unweighted mutual k-NN graph on the first `k` columns of `nt`.
pub fn mutual_knn_graph(nt: &NeighborTable, k: usize) -> Result<ReducedGraph> {
    if k == 0 || k > nt.k_max() {
        return Err(Error::input(format!("k must lie in 1..={}, got {k}", nt.k_max())));
    }
    let directed = (0..nt.len())
        .map(|p| nt.row_indices(p).iter().take(k).map(|&q| (q, 1.0)).collect())
        .collect();
    mutualize(nt.len(), directed)
}
