//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use graph_reduce::{NeighborTable, PointSet, ReducedGraph, Seed};
use ndarray::Array2;
use rand::Rng;

/// Full sort of every other point by (distance, index).
pub fn knn_oracle(ps: &PointSet, k: usize) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let pts = ps.points();
    let n = ps.len();
    let mut dists = Vec::with_capacity(n);
    let mut idx = Vec::with_capacity(n);
    for p in 0..n {
        let mut all: Vec<(f64, usize)> = (0..n)
            .filter(|&q| q != p)
            .map(|q| {
                let mut s = 0.0;
                for j in 0..ps.dim() {
                    let diff = pts[[p, j]] - pts[[q, j]];
                    s += diff * diff;
                }
                (s, q)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        dists.push(all[..k].iter().map(|x| x.0.sqrt()).collect());
        idx.push(all[..k].iter().map(|x| x.1).collect());
    }
    (dists, idx)
}

/// Cyclic Jacobi eigenvalue iteration. Returns ascending eigenvalues and
/// eigenvectors as columns.
pub fn jacobi_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = Array2::<f64>::eye(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].partial_cmp(&a[[j, j]]).unwrap());
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        vectors.column_mut(col).assign(&v.column(i));
    }
    (values, vectors)
}

/// Dense `I - D^-1/2 A D^-1/2` with identity rows for isolated vertices.
pub fn dense_laplacian(g: &ReducedGraph) -> Array2<f64> {
    let n = g.n();
    let deg: Vec<f64> = (0..n).map(|p| g.neighbors(p).iter().map(|e| e.1).sum()).collect();
    let mut l = Array2::eye(n);
    for p in 0..n {
        for &(q, w) in g.neighbors(p) {
            l[[p, q]] -= w / (deg[p] * deg[q]).sqrt();
        }
    }
    l
}

/// Connected components by depth-first search, sizes included.
pub fn component_sizes(g: &ReducedGraph) -> Vec<usize> {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![s];
        let mut size = 0;
        while let Some(p) = stack.pop() {
            size += 1;
            for &(q, _) in g.neighbors(p) {
                if !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

/// ACC maximized over every injective relabeling of the predicted clusters.
pub fn brute_force_acc(truth: &[usize], pred: &[usize]) -> f64 {
    let t = truth.iter().max().unwrap() + 1;
    let c = pred.iter().max().unwrap() + 1;
    let size = t.max(c);
    let mut counts = vec![vec![0usize; size]; size];
    for (&a, &b) in truth.iter().zip(pred) {
        counts[b][a] += 1;
    }
    let mut perm: Vec<usize> = (0..size).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut |p| {
        let hits: usize = (0..size).map(|i| counts[i][p[i]]).sum();
        best = best.max(hits);
    });
    best as f64 / truth.len() as f64
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

fn choose2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Hubert–Arabie ARI from the contingency table and its marginals.
pub fn contingency_ari(truth: &[usize], pred: &[usize]) -> f64 {
    let mut table: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, f64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, f64> = BTreeMap::new();
    for (&a, &b) in truth.iter().zip(pred) {
        *table.entry((a, b)).or_default() += 1.0;
        *rows.entry(a).or_default() += 1.0;
        *cols.entry(b).or_default() += 1.0;
    }
    let index: f64 = table.values().map(|&x| choose2(x)).sum();
    let a: f64 = rows.values().map(|&x| choose2(x)).sum();
    let b: f64 = cols.values().map(|&x| choose2(x)).sum();
    let total = choose2(truth.len() as f64);
    let expected = a * b / total;
    let max = 0.5 * (a + b);
    if max == expected {
        return if truth_equals_up_to_relabel(truth, pred) { 1.0 } else { 0.0 };
    }
    (index - expected) / (max - expected)
}

fn truth_equals_up_to_relabel(a: &[usize], b: &[usize]) -> bool {
    let mut ab = BTreeMap::new();
    let mut ba = BTreeMap::new();
    a.iter()
        .zip(b)
        .all(|(x, y)| *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x)
}

/// (n11, n00, n01, n10) by enumerating every unordered pair.
pub fn pair_counts_oracle(truth: &[usize], pred: &[usize]) -> (u64, u64, u64, u64) {
    let (mut n11, mut n00, mut n01, mut n10) = (0, 0, 0, 0);
    for i in 0..truth.len() {
        for j in i + 1..truth.len() {
            match (truth[i] == truth[j], pred[i] == pred[j]) {
                (true, true) => n11 += 1,
                (false, false) => n00 += 1,
                (true, false) => n01 += 1,
                (false, true) => n10 += 1,
            }
        }
    }
    (n11, n00, n01, n10)
}

/// Undirected edge set `{(p, q) : p < q}`.
pub fn edge_set(g: &ReducedGraph) -> BTreeSet<(usize, usize)> {
    g.edges().map(|(p, q, _)| (p, q)).collect()
}

/// Directed survivor pairs intersected with their own transpose.
pub fn mutual_oracle(g: &ReducedGraph) -> BTreeSet<(usize, usize)> {
    let directed: BTreeSet<(usize, usize)> = (0..g.n())
        .flat_map(|p| g.directed_survivors()[p].iter().map(move |&(q, _)| (p, q)))
        .collect();
    directed
        .iter()
        .filter(|&&(p, q)| p < q && directed.contains(&(q, p)))
        .copied()
        .collect()
}

/// A random Gaussian-mixture point set: 2 to 4 clusters in 1 to 3 dimensions.
pub fn random_points(rng: &mut impl Rng, max_n: usize) -> PointSet {
    let dim = rng.random_range(1..=3);
    let clusters = rng.random_range(2..=4);
    let n = rng.random_range(12.max(clusters * 3)..=max_n);
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect();
    let spreads: Vec<f64> = (0..clusters).map(|_| rng.random_range(0.2..2.0)).collect();
    let mut coords = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % clusters;
        for &center in &centers[c] {
            let u: f64 = rng.random_range(-1.0..1.0);
            let w: f64 = rng.random_range(-1.0..1.0);
            coords.push(center + spreads[c] * (u + w));
        }
        labels.push(c);
    }
    let pts = Array2::from_shape_vec((n, dim), coords).unwrap();
    PointSet::new(pts, Some(labels), "random").unwrap()
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    Seed(seed).rng()
}

/// Random labelings with at most `c` classes, each class non-empty.
pub fn random_labels(rng: &mut impl Rng, n: usize, c: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).map(|i| if i < c { i } else { rng.random_range(0..c) }).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
    v
}

pub fn neighbor_rows(nt: &NeighborTable) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    (
        (0..nt.len()).map(|p| nt.row_distances(p).to_vec()).collect(),
        (0..nt.len()).map(|p| nt.row_indices(p).to_vec()).collect(),
    )
}
