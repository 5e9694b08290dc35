//! Normalized-Laplacian spectral clustering (Ng–Jordan–Weiss).
//!
//! `L_sym = I - D^{-1/2} A D^{-1/2}`; the eigenvectors of the C smallest
//! eigenvalues are stacked as columns, rows are scaled to unit length and
//! clustered with seeded k-means++.
//!
//! Graphs up to [`DENSE_LIMIT`] vertices use a dense symmetric solver. Larger
//! graphs use Chebyshev-filtered block subspace iteration with Rayleigh–Ritz
//! extraction, driven by sparse products only.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;

use crate::data::Seed;
use crate::error::{Error, Result};
use crate::reduce::{ReducedGraph, UnionFind};

pub const DENSE_LIMIT: usize = 3000;
pub const ITERATIVE_TOL: f64 = 1e-10;
pub const ITERATIVE_MAX_ITER: usize = 5000;
pub const KMEANS_MAX_ITER: usize = 300;
pub const KMEANS_RESTARTS: usize = 10;

/// Sparse symmetric normalized Laplacian.
#[derive(Debug, Clone)]
pub struct Laplacian {
    n: usize,
    /// `(q, w / sqrt(d_p d_q))` per row: the off-diagonal of `D^{-1/2} A D^{-1/2}`.
    scaled: Vec<Vec<(usize, f64)>>,
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `y = L x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (p, row) in self.scaled.iter().enumerate() {
            let s: f64 = row.iter().map(|&(q, w)| w * x[q]).sum();
            y[p] = x[p] - s;
        }
    }

    /// Vertex sets of the connected components, each sorted, ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.n);
        for (p, row) in self.scaled.iter().enumerate() {
            for &(q, _) in row {
                uf.union(p, q);
            }
        }
        let mut slot = vec![usize::MAX; self.n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for v in 0..self.n {
            let root = uf.find(v);
            if slot[root] == usize::MAX {
                slot[root] = out.len();
                out.push(Vec::new());
            }
            out[slot[root]].push(v);
        }
        out
    }

    /// Principal submatrix on `members` (which must be a union of components).
    fn restrict(&self, members: &[usize]) -> Laplacian {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in members.iter().enumerate() {
            local[v] = i;
        }
        let scaled = members
            .iter()
            .map(|&v| self.scaled[v].iter().map(|&(q, w)| (local[q], w)).collect())
            .collect();
        Laplacian {
            n: members.len(),
            scaled,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.n, self.n);
        for (p, row) in self.scaled.iter().enumerate() {
            for &(q, w) in row {
                m[(p, q)] -= w;
            }
        }
        m
    }
}

/// Isolated vertices keep an identity row.
pub fn laplacian(g: &ReducedGraph) -> Laplacian {
    let n = g.n();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|p| {
            let d: f64 = g.neighbors(p).iter().map(|e| e.1).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let scaled = (0..n)
        .map(|p| {
            g.neighbors(p)
                .iter()
                .map(|&(q, w)| (q, w * inv_sqrt[p] * inv_sqrt[q]))
                .collect()
        })
        .collect();
    Laplacian { n, scaled }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Dense below [`DENSE_LIMIT`], iterative above.
    Auto,
    Dense,
    Iterative,
}

/// Spectral coordinates.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// Row-normalized N×C coordinates.
    pub vectors: Array2<f64>,
    /// The C smallest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Raw (un-normalized) eigenvectors as columns.
    pub eigenvectors: DMatrix<f64>,
    /// Rows that were identically zero and left unnormalized.
    pub zero_rows: Vec<usize>,
}

pub fn embed(l: &Laplacian, c: usize) -> Result<Embedding> {
    embed_with(l, c, Solver::Auto)
}

pub fn embed_with(l: &Laplacian, c: usize, solver: Solver) -> Result<Embedding> {
    let n = l.n();
    if c < 2 || c > n {
        return Err(Error::input(format!("cluster count must lie in 2..={n}, got {c}")));
    }
    let (eigenvalues, eigenvectors) = smallest_eigenpairs_with(l, c, solver)?;

    let mut vectors = Array2::zeros((n, c));
    let mut zero_rows = Vec::new();
    for p in 0..n {
        let norm = (0..c).map(|j| eigenvectors[(p, j)].powi(2)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for j in 0..c {
                vectors[[p, j]] = eigenvectors[(p, j)] / norm;
            }
        } else {
            zero_rows.push(p);
        }
    }
    if !zero_rows.is_empty() {
        log::info!("{} embedding rows are identically zero", zero_rows.len());
    }
    Ok(Embedding {
        vectors,
        eigenvalues,
        eigenvectors,
        zero_rows,
    })
}

/// Eigenvalues below this are treated as exact zeros when ordering.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

/// The `m` smallest eigenpairs of `L`, eigenvectors as columns.
///
/// `L` is block diagonal over connected components, so each component is
/// solved on its own and the spectra are merged. Within the null space, whose
/// basis is otherwise arbitrary, larger components come first; this makes the
/// embedding of a graph with more than C components deterministic.
pub fn smallest_eigenpairs(l: &Laplacian, m: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    smallest_eigenpairs_with(l, m, Solver::Auto)
}

pub fn smallest_eigenpairs_with(l: &Laplacian, m: usize, solver: Solver) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = l.n();
    let m = m.min(n);
    struct Candidate {
        value: f64,
        size: usize,
        component: usize,
        local: usize,
    }
    let components = l.components();
    let mut solved: Vec<(Vec<f64>, DMatrix<f64>)> = Vec::with_capacity(components.len());
    let mut candidates = Vec::new();
    for (ci, members) in components.iter().enumerate() {
        let block = l.restrict(members);
        let want = m.min(members.len());
        let use_dense = match solver {
            Solver::Auto => members.len() <= DENSE_LIMIT,
            Solver::Dense => true,
            Solver::Iterative => false,
        };
        let pairs = if use_dense || want + 4 >= members.len() {
            smallest_dense(&block, want)?
        } else {
            smallest_iterative(&block, want)?
        };
        for (local, &value) in pairs.0.iter().enumerate() {
            candidates.push(Candidate {
                value,
                size: members.len(),
                component: ci,
                local,
            });
        }
        solved.push(pairs);
    }
    let key = |c: &Candidate| if c.value.abs() < ZERO_EIGENVALUE_TOL { 0.0 } else { c.value };
    candidates.sort_by(|a, b| {
        key(a)
            .total_cmp(&key(b))
            .then(b.size.cmp(&a.size))
            .then(a.component.cmp(&b.component))
            .then(a.local.cmp(&b.local))
    });
    candidates.truncate(m);
    // Report in ascending order of the actual values.
    candidates.sort_by(|a, b| {
        key(a)
            .total_cmp(&key(b))
            .then(a.value.total_cmp(&b.value))
            .then(b.size.cmp(&a.size))
            .then(a.component.cmp(&b.component))
    });

    let mut vectors = DMatrix::zeros(n, m);
    for (j, cand) in candidates.iter().enumerate() {
        let members = &components[cand.component];
        let local = &solved[cand.component].1;
        for (r, &v) in members.iter().enumerate() {
            vectors[(v, j)] = local[(r, cand.local)];
        }
    }
    Ok((candidates.iter().map(|c| c.value).collect(), vectors))
}

fn sorted_pairs(values: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

fn smallest_dense(l: &Laplacian, c: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::try_new(l.to_dense(), 1e-14, 0)
        .ok_or_else(|| Error::Numeric("dense symmetric eigensolver did not converge".into()))?;
    let order = sorted_pairs(&eig.eigenvalues);
    let values = order[..c].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(l.n(), c, |r, j| eig.eigenvectors[(r, order[j])]);
    Ok((values, vectors))
}

fn orthonormalize(block: &mut DMatrix<f64>) {
    let qr = block.clone().qr();
    *block = qr.q();
}

/// Degree of the Chebyshev filter applied per outer iteration.
const FILTER_DEGREE: usize = 8;

/// Chebyshev-filtered block subspace iteration with Rayleigh–Ritz.
///
/// Each step applies `T_d((L - c0) / e)` with `[c0 - e, c0 + e]` spanning
/// from the largest current Ritz value to 2, the top of the spectrum of `L`.
/// That damps the unwanted part of the spectrum and amplifies the bottom.
fn smallest_iterative(l: &Laplacian, c: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = l.n();
    let block = (2 * c + 8).min(n);
    let mut rng = Seed(0x5eed_1a9c).rng();
    let mut x = DMatrix::from_fn(n, block, |_, _| rng.random_range(-1.0..1.0));
    orthonormalize(&mut x);

    let apply_l = |x: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(n, x.ncols());
        let cols: Vec<Vec<f64>> = (0..x.ncols())
            .into_par_iter()
            .map(|j| {
                let mut y = vec![0.0; n];
                l.apply(x.column(j).as_slice(), &mut y);
                y
            })
            .collect();
        for (j, col) in cols.into_iter().enumerate() {
            out.column_mut(j).copy_from_slice(&col);
        }
        out
    };

    let mut cut: f64 = 1.0;
    let mut worst = f64::INFINITY;
    for _ in 0..ITERATIVE_MAX_ITER {
        let e = ((2.0 - cut) / 2.0).max(1e-3);
        let c0 = 2.0 - e;
        let mut prev = x.clone();
        let mut cur = (apply_l(&x) - &x * c0) / e;
        for _ in 1..FILTER_DEGREE {
            let next = (apply_l(&cur) - &cur * c0) * (2.0 / e) - &prev;
            prev = cur;
            cur = next;
        }
        let mut y = cur;
        orthonormalize(&mut y);

        let ly = apply_l(&y);
        let h = y.transpose() * &ly;
        let h = (&h + h.transpose()) * 0.5;
        let small = SymmetricEigen::new(h);
        let order = sorted_pairs(&small.eigenvalues);
        let rot = DMatrix::from_fn(block, block, |r, j| small.eigenvectors[(r, order[j])]);
        x = &y * &rot;
        let lx = &ly * &rot;
        cut = small.eigenvalues[order[block - 1]];

        worst = (0..c)
            .map(|j| {
                let lambda = small.eigenvalues[order[j]];
                (lx.column(j) - x.column(j) * lambda).norm()
            })
            .fold(0.0, f64::max);
        if worst < ITERATIVE_TOL {
            let values = (0..c).map(|j| small.eigenvalues[order[j]]).collect();
            return Ok((values, x.columns(0, c).into_owned()));
        }
    }
    Err(Error::Numeric(format!(
        "subspace iteration did not reach residual {ITERATIVE_TOL:e} in {ITERATIVE_MAX_ITER} iterations (last {worst:e}) for n={n}, c={c}"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub n_components: usize,
    /// Fewer than C distinct labels came out of k-means.
    pub collapsed: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct Lloyd {
    labels: Vec<usize>,
    inertia: f64,
}

fn kmeans_once(rows: &[Vec<f64>], c: usize, seed: Seed) -> Lloyd {
    let n = rows.len();
    let dim = rows[0].len();
    let mut rng = seed.rng();

    // k-means++ seeding.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(c);
    centers.push(rows[rng.random_range(0..n)].clone());
    let mut nearest: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < c {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(rows[pick].clone());
        for (d, r) in nearest.iter_mut().zip(rows) {
            *d = d.min(sq_dist(r, &centers[centers.len() - 1]));
        }
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, r) in rows.iter().enumerate() {
            let best = (0..c)
                .min_by(|&a, &b| sq_dist(r, &centers[a]).total_cmp(&sq_dist(r, &centers[b])))
                .expect("c >= 1");
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; c];
        let mut counts = vec![0usize; c];
        for (r, &l) in rows.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(r) {
                *s += v;
            }
        }
        for k in 0..c {
            if counts[k] > 0 {
                centers[k] = sums[k].iter().map(|s| s / counts[k] as f64).collect();
            }
        }
        // An emptied cluster takes over the point farthest from its centroid.
        for k in 0..c {
            if counts[k] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(&rows[a], &centers[labels[a]]);
                        let db = sq_dist(&rows[b], &centers[labels[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("n >= 1");
                counts[labels[far]] -= 1;
                centers[k] = rows[far].clone();
                labels[far] = k;
                counts[k] = 1;
            }
        }
    }
    let inertia = rows
        .iter()
        .zip(&labels)
        .map(|(r, &l)| sq_dist(r, &centers[l]))
        .sum();
    Lloyd { labels, inertia }
}

/// k-means++ with `restarts` seeded restarts; lowest inertia wins, ties to the
/// earliest restart. Restart `i` uses `seed.derive(i)`.
pub fn kmeans_rows(rows: &[Vec<f64>], c: usize, seed: Seed, restarts: usize) -> Result<ClusterResult> {
    let n = rows.len();
    if c == 0 || c > n {
        return Err(Error::input(format!("cluster count must lie in 1..={n}, got {c}")));
    }
    let restarts = restarts.max(1);
    let runs: Vec<Lloyd> = (0..restarts as u64)
        .into_par_iter()
        .map(|i| kmeans_once(rows, c, seed.derive(i)))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");
    let mut used = vec![false; c];
    for &l in &best.labels {
        used[l] = true;
    }
    let collapsed = used.iter().any(|u| !u);
    Ok(ClusterResult {
        labels: best.labels,
        inertia: best.inertia,
        n_components: 0,
        collapsed,
    })
}

pub fn kmeans(e: &Embedding, c: usize, seed: Seed, restarts: usize) -> Result<ClusterResult> {
    let rows: Vec<Vec<f64>> = e.vectors.rows().into_iter().map(|r| r.to_vec()).collect();
    kmeans_rows(&rows, c, seed, restarts)
}

/// Laplacian, embedding and k-means with the default restart count.
pub fn spectral_cluster(g: &ReducedGraph, c: usize, seed: Seed) -> Result<ClusterResult> {
    let e = embed(&laplacian(g), c)?;
    let mut result = kmeans(&e, c, seed, KMEANS_RESTARTS)?;
    result.n_components = g.n_components();
    if result.collapsed {
        log::warn!("k-means produced fewer than {c} clusters");
    }
    Ok(result)
}
