//! Clustering accuracy, adjusted Rand index and edge percentage.

use crate::error::{Error, Result};
use crate::reduce::ReducedGraph;

/// Pair-agreement counts over all `N(N-1)/2` unordered pairs.
///
/// `n11`: same cluster in both; `n00`: different in both; `n01`: same in
/// truth only; `n10`: same in prediction only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub n11: u64,
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.n11 + self.n00 + self.n01 + self.n10
    }
}

fn check_lengths(truth: &[usize], pred: &[usize]) -> Result<()> {
    if truth.len() != pred.len() {
        return Err(Error::input(format!(
            "label length mismatch: truth={}, pred={}",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::input("labelings are empty"));
    }
    Ok(())
}

/// Dense re-encoding of arbitrary ids to `0..k`, first-appearance order.
fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

/// Contingency matrix `m[t][p]` of compacted labels.
pub fn contingency(truth: &[usize], pred: &[usize]) -> Vec<Vec<u64>> {
    let (t, kt) = compact(truth);
    let (p, kp) = compact(pred);
    let mut m = vec![vec![0u64; kp]; kt];
    for (&a, &b) in t.iter().zip(&p) {
        m[a][b] += 1;
    }
    m
}

fn choose2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

/// Pair counts from contingency sums (exact integer arithmetic).
pub fn pair_counts(truth: &[usize], pred: &[usize]) -> Result<PairCounts> {
    check_lengths(truth, pred)?;
    let m = contingency(truth, pred);
    let n = truth.len() as u64;
    let same_both: u64 = m.iter().flatten().map(|&c| choose2(c)).sum();
    let same_truth: u64 = m.iter().map(|row| choose2(row.iter().sum())).sum();
    let same_pred: u64 = (0..m[0].len())
        .map(|j| choose2(m.iter().map(|row| row[j]).sum()))
        .sum();
    let n11 = same_both;
    let n01 = same_truth - same_both;
    let n10 = same_pred - same_both;
    let n00 = choose2(n) - n11 - n01 - n10;
    Ok(PairCounts { n11, n00, n01, n10 })
}

/// `2(n00 n11 - n01 n10) / ((n00 + n01)(n01 + n11) + (n00 + n10)(n10 + n11))`.
///
/// A zero denominator returns 1 when the partitions are identical and 0
/// otherwise.
pub fn ari(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let pc = pair_counts(truth, pred)?;
    let (n11, n00, n01, n10) = (pc.n11 as i128, pc.n00 as i128, pc.n01 as i128, pc.n10 as i128);
    let num = 2 * (n00 * n11 - n01 * n10);
    let den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if den == 0 {
        return Ok(if pc.n01 == 0 && pc.n10 == 0 { 1.0 } else { 0.0 });
    }
    Ok(num as f64 / den as f64)
}

/// Minimum-cost perfect assignment on a square matrix (Kuhn–Munkres with
/// potentials, O(n³)). Returns `assign[row] = column`.
pub fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0usize;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = i64::MAX;
            let mut col1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[r - 1][j - 1] - u[r] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = col0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        col1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if owner[j] != 0 {
            assign[owner[j] - 1] = j - 1;
        }
    }
    assign
}

/// Fraction of points whose predicted cluster maps to their true class under
/// the best one-to-one mapping of cluster ids.
pub fn acc(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_lengths(truth, pred)?;
    let m = contingency(truth, pred);
    let size = m.len().max(m[0].len());
    // Rows are predicted clusters, columns true classes, padded square.
    let cost: Vec<Vec<i64>> = (0..size)
        .map(|p| {
            (0..size)
                .map(|t| -(m.get(t).and_then(|row| row.get(p)).copied().unwrap_or(0) as i64))
                .collect()
        })
        .collect();
    let assign = hungarian(&cost);
    let hits: i64 = assign.iter().enumerate().map(|(p, &t)| -cost[p][t]).sum();
    Ok(hits as f64 / truth.len() as f64)
}

/// Ordered surviving pairs over the full graph size `N × N`.
pub fn edge_percentage(g: &ReducedGraph) -> f64 {
    let n = g.n() as f64;
    2.0 * g.edge_count() as f64 / (n * n)
}
