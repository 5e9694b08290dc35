//! Exact brute-force k-nearest-neighbor tables.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::data::PointSet;
use crate::error::{Error, Result};

/// Per-point sorted `k_max` nearest neighbors (self excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    distances: Array2<f64>,
    indices: Array2<usize>,
}

impl NeighborTable {
    /// Builds a table from raw parts, checking the row invariants.
    pub fn from_parts(distances: Array2<f64>, indices: Array2<usize>) -> Result<Self> {
        let (n, k) = distances.dim();
        if indices.dim() != (n, k) {
            return Err(Error::input("distance and index matrices differ in shape"));
        }
        if k == 0 || k >= n.max(1) {
            return Err(Error::input(format!("k_max must lie in 1..={}, got {k}", n.saturating_sub(1))));
        }
        for r in 0..n {
            let d = distances.row(r);
            let ix = indices.row(r);
            if d.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::input(format!("row {r} has a negative or non-finite distance")));
            }
            if d.iter().zip(d.iter().skip(1)).any(|(a, b)| a > b) {
                return Err(Error::input(format!("row {r} distances are not ascending")));
            }
            let mut seen: Vec<usize> = ix.to_vec();
            if seen.iter().any(|&j| j == r || j >= n) {
                return Err(Error::input(format!("row {r} references itself or an unknown point")));
            }
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != k {
                return Err(Error::input(format!("row {r} lists a neighbor twice")));
            }
        }
        Ok(Self { distances, indices })
    }

    pub fn len(&self) -> usize {
        self.distances.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.nrows() == 0
    }

    pub fn k_max(&self) -> usize {
        self.distances.ncols()
    }

    pub fn distances(&self) -> &Array2<f64> {
        &self.distances
    }

    pub fn indices(&self) -> &Array2<usize> {
        &self.indices
    }

    pub fn row_distances(&self, p: usize) -> ArrayView1<'_, f64> {
        self.distances.row(p)
    }

    pub fn row_indices(&self, p: usize) -> ArrayView1<'_, usize> {
        self.indices.row(p)
    }

    /// Position of `q` in `p`'s neighbor row, if present.
    pub fn position(&self, p: usize, q: usize) -> Option<usize> {
        self.indices.row(p).iter().position(|&j| j == q)
    }
}

/// `min(N - 1, 50)`.
pub fn default_k_max(n: usize) -> usize {
    n.saturating_sub(1).min(50)
}

pub(crate) fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact Euclidean k-NN by scanning all pairs. Ties go to the smaller index.
pub fn build_knn(ps: &PointSet, k_max: usize) -> Result<NeighborTable> {
    let n = ps.len();
    if k_max == 0 || k_max > n - 1 {
        return Err(Error::input(format!(
            "k_max must lie in 1..={} for {n} points, got {k_max}",
            n - 1
        )));
    }
    let pts = ps.points();

    let rows: Vec<Vec<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let here = pts.row(p);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&q| q != p)
                .map(|q| (squared_distance(here, pts.row(q)), q))
                .collect();
            let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k_max < cand.len() {
                cand.select_nth_unstable_by(k_max - 1, order);
                cand.truncate(k_max);
            }
            cand.sort_unstable_by(order);
            cand
        })
        .collect();

    let mut distances = Array2::zeros((n, k_max));
    let mut indices = Array2::zeros((n, k_max));
    for (p, row) in rows.into_iter().enumerate() {
        for (j, (d2, q)) in row.into_iter().enumerate() {
            distances[[p, j]] = d2.sqrt();
            indices[[p, j]] = q;
        }
    }
    Ok(NeighborTable { distances, indices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line(xs: &[f64]) -> PointSet {
        let pts = Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).unwrap();
        PointSet::new(pts, None, "line").unwrap()
    }

    #[test]
    fn collinear_points() {
        let nt = build_knn(&line(&[0.0, 1.0, 3.0]), 2).unwrap();
        assert_eq!(nt.row_indices(0).to_vec(), vec![1, 2]);
        assert_eq!(nt.row_distances(0).to_vec(), vec![1.0, 3.0]);
        assert_eq!(nt.row_indices(2).to_vec(), vec![1, 0]);
    }

    #[test]
    fn duplicate_points_come_first() {
        let pts = array![[0.0, 0.0], [5.0, 5.0], [0.0, 0.0]];
        let nt = build_knn(&PointSet::new(pts, None, "dup").unwrap(), 2).unwrap();
        assert_eq!(nt.row_indices(0)[0], 2);
        assert_eq!(nt.row_distances(0)[0], 0.0);
    }

    #[test]
    fn ties_break_by_index() {
        let nt = build_knn(&line(&[0.0, -1.0, 1.0, 2.0]), 3).unwrap();
        assert_eq!(nt.row_indices(0).to_vec(), vec![1, 2, 3]);
    }

    #[test]
    fn k_out_of_range() {
        let ps = line(&[0.0, 1.0, 2.0]);
        assert!(build_knn(&ps, 0).is_err());
        assert!(build_knn(&ps, 3).is_err());
        assert!(build_knn(&ps, 2).is_ok());
    }

    #[test]
    fn default_k() {
        assert_eq!(default_k_max(10), 9);
        assert_eq!(default_k_max(1000), 50);
    }

    #[test]
    fn from_parts_rejects_bad_rows() {
        let d = array![[1.0], [1.0]];
        assert!(NeighborTable::from_parts(d.clone(), array![[1], [0]]).is_ok());
        assert!(NeighborTable::from_parts(d, array![[0], [0]]).is_err());
        let unsorted = array![[2.0, 1.0], [1.0, 1.0], [1.0, 2.0]];
        assert!(NeighborTable::from_parts(unsorted, array![[1, 2], [0, 2], [1, 0]]).is_err());
    }
}
