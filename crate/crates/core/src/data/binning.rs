//! Numeric discretization: percentile bins and Jenks natural breaks.
//!
//! Both produce a sorted list of interior edges. A value `v` falls in bin
//! `i` where `i` is the number of edges strictly below `v`, so every bin is
//! the right-closed interval `(edges[i-1], edges[i]]`.

use serde::{Deserialize, Serialize};

use crate::data::dataset::Dataset;
use crate::error::{AuditError, Result};

pub const DEFAULT_PERCENTILE_BINS: usize = 10;

/// Bin index of `value` under `edges`.
#[inline]
pub fn bin_index(edges: &[f64], value: f64) -> usize {
    edges.partition_point(|e| *e < value)
}

/// Linear-interpolation quantile of an ascending slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Interior percentile edges for already-filtered finite values.
pub fn percentile_edges(values: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    if n_bins < 2 {
        return Err(AuditError::InvalidArgument(format!(
            "need at least 2 bins, got {n_bins}"
        )));
    }
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    if sorted.is_empty() {
        return Err(AuditError::AllMissing(String::new()));
    }
    sorted.sort_by(f64::total_cmp);
    let max = sorted[sorted.len() - 1];
    let mut edges: Vec<f64> = Vec::with_capacity(n_bins - 1);
    for i in 1..n_bins {
        let e = quantile_sorted(&sorted, i as f64 / n_bins as f64);
        // an edge at the maximum would leave an empty top bin
        if e >= max {
            break;
        }
        if edges.last().is_none_or(|last| e > *last) {
            edges.push(e);
        }
    }
    Ok(edges)
}

/// Percentile edges of a numeric dataset column (missing cells excluded).
pub fn percentile_bin(dataset: &Dataset, column: &str, n_bins: usize) -> Result<Vec<f64>> {
    let values = dataset.non_missing(column)?;
    percentile_edges(&values, n_bins).map_err(|e| match e {
        AuditError::AllMissing(_) => AuditError::AllMissing(format!(" in column `{column}`")),
        other => other,
    })
}

/// Result of a Jenks natural-breaks classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JenksBreaks {
    /// Upper bound of every class except the last.
    pub edges: Vec<f64>,
    /// Goodness of variance fit, `1 - SSW/SST`.
    pub gvf: f64,
    pub ssw: f64,
    pub sst: f64,
}

impl JenksBreaks {
    pub fn classes(&self) -> usize {
        self.edges.len() + 1
    }
}

/// Weighted distinct values with centered prefix sums.
struct Distinct {
    values: Vec<f64>,
    w: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Distinct {
    fn new(values: &[f64]) -> Result<Self> {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        if sorted.is_empty() {
            return Err(AuditError::AllMissing(String::new()));
        }
        sorted.sort_by(f64::total_cmp);
        let mut distinct: Vec<f64> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        for v in sorted {
            if distinct.last() == Some(&v) {
                *counts.last_mut().unwrap() += 1.0;
            } else {
                distinct.push(v);
                counts.push(1.0);
            }
        }
        let total: f64 = counts.iter().sum();
        let center = distinct
            .iter()
            .zip(&counts)
            .map(|(v, c)| v * c)
            .sum::<f64>()
            / total;
        let d = distinct.len();
        let (mut w, mut s1, mut s2) = (vec![0.0; d + 1], vec![0.0; d + 1], vec![0.0; d + 1]);
        for i in 0..d {
            let x = distinct[i] - center;
            w[i + 1] = w[i] + counts[i];
            s1[i + 1] = s1[i] + counts[i] * x;
            s2[i + 1] = s2[i] + counts[i] * x * x;
        }
        Ok(Distinct {
            values: distinct,
            w,
            s1,
            s2,
        })
    }

    fn len(&self) -> usize {
        self.values.len()
    }

    /// Within-class sum of squares of distinct values `lo..=hi`.
    #[inline]
    fn cost(&self, lo: usize, hi: usize) -> f64 {
        let w = self.w[hi + 1] - self.w[lo];
        let s = self.s1[hi + 1] - self.s1[lo];
        let ss = self.s2[hi + 1] - self.s2[lo];
        (ss - s * s / w).max(0.0)
    }
}

/// Fisher's optimal 1-D partition computed one class count at a time.
///
/// Row `k` of the table holds, for every prefix of distinct values, the
/// minimal within-class sum of squares using `k` classes. Each row is filled
/// by divide and conquer over monotone split points.
struct JenksTable {
    data: Distinct,
    cost: Vec<Vec<f64>>,
    split: Vec<Vec<u32>>,
}

impl JenksTable {
    fn new(data: Distinct) -> Self {
        let d = data.len();
        let first: Vec<f64> = (0..d).map(|j| data.cost(0, j)).collect();
        JenksTable {
            data,
            cost: vec![first],
            split: vec![vec![0; d]],
        }
    }

    fn sst(&self) -> f64 {
        self.data.cost(0, self.data.len() - 1)
    }

    fn extend_to(&mut self, k: usize) {
        let d = self.data.len();
        while self.cost.len() < k {
            let prev = self.cost.last().unwrap().clone();
            let kk = self.cost.len(); // classes in the row being built, minus one
            let mut row = vec![f64::INFINITY; d];
            let mut split = vec![0u32; d];
            if kk < d {
                self.fill(&prev, &mut row, &mut split, kk, d - 1, kk, d - 1);
            }
            self.cost.push(row);
            self.split.push(split);
        }
    }

    /// Fills `row[lo..=hi]`; the last class starts at a split in `opt_lo..=opt_hi`.
    #[allow(clippy::too_many_arguments)]
    fn fill(
        &self,
        prev: &[f64],
        row: &mut [f64],
        split: &mut [u32],
        lo: usize,
        hi: usize,
        opt_lo: usize,
        opt_hi: usize,
    ) {
        if lo > hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let mut best = f64::INFINITY;
        let mut best_i = opt_lo;
        for i in opt_lo..=opt_hi.min(mid) {
            let c = prev[i - 1] + self.data.cost(i, mid);
            if c < best {
                best = c;
                best_i = i;
            }
        }
        row[mid] = best;
        split[mid] = best_i as u32;
        if mid > lo {
            self.fill(prev, row, split, lo, mid - 1, opt_lo, best_i);
        }
        self.fill(prev, row, split, mid + 1, hi, best_i, opt_hi);
    }

    fn breaks(&mut self, k: usize) -> JenksBreaks {
        self.extend_to(k);
        let d = self.data.len();
        let mut starts = Vec::with_capacity(k);
        let mut end = d - 1;
        for row in (1..k).rev() {
            let s = self.split[row][end] as usize;
            starts.push(s);
            end = s - 1;
        }
        starts.reverse();
        let edges = starts.iter().map(|&s| self.data.values[s - 1]).collect();
        let ssw = self.cost[k - 1][d - 1];
        let sst = self.sst();
        let gvf = if sst > 0.0 { 1.0 - ssw / sst } else { 1.0 };
        JenksBreaks {
            edges,
            gvf: gvf.clamp(0.0, 1.0),
            ssw,
            sst,
        }
    }
}

fn check_k(k: usize, distinct: usize) -> Result<()> {
    if k == 0 {
        return Err(AuditError::InvalidArgument("k must be at least 1".into()));
    }
    if k > distinct {
        return Err(AuditError::TooFewDistinct {
            requested: k,
            distinct,
        });
    }
    Ok(())
}

/// Optimal `k`-class natural breaks minimizing within-class squared deviation.
pub fn jenks_breaks(values: &[f64], k: usize) -> Result<JenksBreaks> {
    let data = Distinct::new(values)?;
    check_k(k, data.len())?;
    Ok(JenksTable::new(data).breaks(k))
}

/// Smallest class count in `1..=k_max` whose goodness of variance fit
/// reaches `gvf_threshold`; `k_max` if none does.
pub fn select_jenks_k(values: &[f64], gvf_threshold: f64, k_max: usize) -> Result<usize> {
    Ok(select_jenks(values, gvf_threshold, k_max)?.classes())
}

/// Like [`select_jenks_k`] but returns the chosen breaks.
pub fn select_jenks(values: &[f64], gvf_threshold: f64, k_max: usize) -> Result<JenksBreaks> {
    if !(gvf_threshold > 0.0 && gvf_threshold <= 1.0) {
        return Err(AuditError::InvalidArgument(format!(
            "gvf threshold {gvf_threshold} outside (0, 1]"
        )));
    }
    let data = Distinct::new(values)?;
    check_k(k_max, usize::MAX)?;
    let top = k_max.min(data.len());
    let mut table = JenksTable::new(data);
    let mut last = table.breaks(1);
    for k in 1..=top {
        last = table.breaks(k);
        if last.gvf >= gvf_threshold {
            break;
        }
    }
    Ok(last)
}
