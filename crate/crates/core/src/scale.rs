//! Per-point local scale σ_p.
//!
//! All N·k_max neighbor distances share one Freedman–Diaconis bin width. Each
//! point then bins its own neighbor distances on that grid, smooths the counts
//! with a rank-weighted moving average and looks for the first bin whose raw
//! count rises above its smoothed value: a density break. σ_p is the mean
//! distance to the neighbors before the break.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knn::NeighborTable;

/// Linear-interpolation quantile (`h = (n - 1) q`) of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Freedman–Diaconis width `2 IQR n^(-1/3)`.
///
/// Falls back to `(max - min) / ceil(sqrt(n))` when the IQR is zero and to 1
/// when all values are equal.
pub fn fd_bin_width(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::input("cannot compute a bin width of no values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("bin width input contains non-finite values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    if iqr > 0.0 {
        return Ok(2.0 * iqr * n.powf(-1.0 / 3.0));
    }
    let range = sorted[sorted.len() - 1] - sorted[0];
    if range > 0.0 {
        Ok(range / n.sqrt().ceil())
    } else {
        Ok(1.0)
    }
}

/// Histogram of one point's neighbor distances on the shared grid.
///
/// Bins are anchored at distance 0: bin `i` covers `[i w, (i + 1) w)` and has
/// rank `i + 1`, so rank 1 is the bin of the closest neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub ranks: Vec<usize>,
}

impl Histogram {
    /// Bins non-negative ascending `values` on the grid `k · bin_width`.
    pub fn on_grid(values: &[f64], bin_width: f64) -> Result<Self> {
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(Error::input(format!("bin width must be positive, got {bin_width}")));
        }
        if values.is_empty() {
            return Err(Error::input("cannot bin an empty row"));
        }
        let index = |v: f64| (v / bin_width).floor() as usize;
        let hi = values.iter().fold(0, |hi, &v| hi.max(index(v)));
        let bins = hi + 1;
        let mut counts = vec![0usize; bins];
        for &v in values {
            counts[index(v)] += 1;
        }
        let edges = (0..=bins).map(|i| i as f64 * bin_width).collect();
        Ok(Self {
            bin_width,
            edges,
            counts,
            ranks: (1..=bins).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Moving weighted average `(v[i-1] + v[i] + v[i+1]) / (r[i-1] + r[i] + r[i+1])`.
/// Neighbors past either end drop out of numerator and denominator alike.
pub fn mwa_smooth(h: &Histogram) -> Vec<f64> {
    smooth(
        &h.counts.iter().map(|&c| c as f64).collect::<Vec<_>>(),
        &h.ranks,
    )
}

pub(crate) fn smooth(values: &[f64], ranks: &[usize]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let window = i.saturating_sub(1)..(i + 2).min(n);
            let v: f64 = values[window.clone()].iter().sum();
            let r: usize = ranks[window].iter().sum();
            v / r as f64
        })
        .collect()
}

/// σ_p and the neighbor cutoff K for one ascending distance row.
pub fn local_scale_row(row_distances: &[f64], bin_width: f64) -> Result<(f64, usize)> {
    let k_max = row_distances.len();
    if row_distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(Error::input("row distances must be finite and non-negative"));
    }
    let hist = Histogram::on_grid(row_distances, bin_width)?;
    let mwa = mwa_smooth(&hist);

    // A spike in the first bin, or one preceded only by empty bins, leaves no
    // neighbors to average; so does the absence of any spike.
    let k = (0..hist.len())
        .find(|&b| hist.counts[b] as f64 > mwa[b])
        .map(|b| hist.counts[..b].iter().sum::<usize>())
        .filter(|&k| k > 0)
        .unwrap_or(k_max);

    let mean = row_distances[..k].iter().sum::<f64>() / k as f64;
    let sigma = if mean > 0.0 {
        mean
    } else {
        row_distances
            .iter()
            .copied()
            .find(|&d| d > 0.0)
            .unwrap_or(bin_width)
    };
    Ok((sigma, k))
}

/// Per-point local scales.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalScales {
    pub sigma: Vec<f64>,
    pub kth: Vec<usize>,
    pub bin_width: f64,
}

impl LocalScales {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

pub fn compute_scales(nt: &NeighborTable) -> Result<LocalScales> {
    let all: Vec<f64> = nt.distances().iter().copied().collect();
    let bin_width = fd_bin_width(&all)?;
    let rows: Vec<(f64, usize)> = (0..nt.len())
        .into_par_iter()
        .map(|p| {
            let row = nt.row_distances(p);
            local_scale_row(row.as_slice().expect("table rows are contiguous"), bin_width)
        })
        .collect::<Result<_>>()?;
    let (sigma, kth) = rows.into_iter().unzip();
    Ok(LocalScales {
        sigma,
        kth,
        bin_width,
    })
}
