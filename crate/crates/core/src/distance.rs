//! Record distances and exhaustive nearest-neighbor scans.
//!
//! Two distances are available. The enhanced Gower distance mixes a 0/1
//! categorical mismatch with a wave-hedges style numeric term and averages
//! them by weight. The binned Hamming distance counts columns whose bin or
//! level differs after every numeric column has been discretized.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BinnedView, Codes, Dataset, MixedView, RecordCoder, DEFAULT_PERCENTILE_BINS};
use crate::error::{AuditError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    EnhancedGower,
    #[default]
    HammingBinned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistanceConfig {
    pub mode: DistanceMode,
    /// Percentile bins per numeric column for `hamming_binned`.
    pub n_bins: usize,
    /// Restricts the comparison to these columns (all when empty).
    pub columns: Vec<String>,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            mode: DistanceMode::HammingBinned,
            n_bins: DEFAULT_PERCENTILE_BINS,
            columns: Vec::new(),
        }
    }
}

impl DistanceConfig {
    pub fn gower() -> Self {
        DistanceConfig {
            mode: DistanceMode::EnhancedGower,
            ..Default::default()
        }
    }

    pub fn hamming(n_bins: usize) -> Self {
        DistanceConfig {
            mode: DistanceMode::HammingBinned,
            n_bins,
            ..Default::default()
        }
    }
}

/// Per-column numeric term of the enhanced Gower distance.
#[inline]
pub fn numeric_component(x: f64, y: f64) -> f64 {
    match (x.is_nan(), y.is_nan()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        _ => {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            if lo >= 0.0 {
                1.0 - (1.0 + lo) / (1.0 + hi)
            } else {
                1.0 - 1.0 / (1.0 + hi + lo.abs())
            }
        }
    }
}

/// Weighted enhanced Gower distance between two encoded rows.
///
/// Categorical cells hold level codes (missing is its own code); numeric
/// cells hold raw values with NaN for missing.
#[inline]
pub fn gower_distance(a: &[f64], b: &[f64], numeric: &[bool], weights: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for m in 0..a.len() {
        let w = weights[m];
        if w == 0.0 {
            continue;
        }
        let d = if numeric[m] {
            numeric_component(a[m], b[m])
        } else if a[m] == b[m] || (a[m].is_nan() && b[m].is_nan()) {
            0.0
        } else {
            1.0
        };
        num += w * d;
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[inline]
fn count_diff<T: Copy + PartialEq>(a: &[T], b: &[T]) -> u32 {
    a.iter().zip(b).map(|(x, y)| u32::from(x != y)).sum()
}

/// Number of columns whose code differs between `a[i]` and `b[j]`.
pub fn hamming_distance(a: &BinnedView, i: usize, b: &BinnedView, j: usize) -> Result<u32> {
    if a.fingerprint() != b.fingerprint() || a.width() != b.width() {
        return Err(AuditError::BinningMismatch);
    }
    let w = a.width();
    Ok(match (a.codes(), b.codes()) {
        (Codes::U8(x), Codes::U8(y)) => count_diff(&x[i * w..(i + 1) * w], &y[j * w..(j + 1) * w]),
        (Codes::U16(x), Codes::U16(y)) => {
            count_diff(&x[i * w..(i + 1) * w], &y[j * w..(j + 1) * w])
        }
        (Codes::U32(x), Codes::U32(y)) => {
            count_diff(&x[i * w..(i + 1) * w], &y[j * w..(j + 1) * w])
        }
        _ => return Err(AuditError::BinningMismatch),
    })
}

/// A dataset encoded for one of the two distances.
#[derive(Debug, Clone)]
pub enum EncodedRecords {
    Binned(BinnedView),
    Mixed(MixedView),
}

impl EncodedRecords {
    pub fn len(&self) -> usize {
        match self {
            EncodedRecords::Binned(v) => v.len(),
            EncodedRecords::Mixed(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> DistanceMode {
        match self {
            EncodedRecords::Binned(_) => DistanceMode::HammingBinned,
            EncodedRecords::Mixed(_) => DistanceMode::EnhancedGower,
        }
    }

    /// Number of compared columns.
    pub fn width(&self) -> usize {
        match self {
            EncodedRecords::Binned(v) => v.width(),
            EncodedRecords::Mixed(v) => v.width(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> EncodedRecords {
        match self {
            EncodedRecords::Binned(v) => EncodedRecords::Binned(v.select_rows(rows)),
            EncodedRecords::Mixed(v) => EncodedRecords::Mixed(v.select_rows(rows)),
        }
    }

    fn compatible(&self, other: &EncodedRecords) -> Result<()> {
        let same = match (self, other) {
            (EncodedRecords::Binned(a), EncodedRecords::Binned(b)) => {
                a.fingerprint() == b.fingerprint()
                    && std::mem::discriminant(a.codes()) == std::mem::discriminant(b.codes())
            }
            (EncodedRecords::Mixed(a), EncodedRecords::Mixed(b)) => {
                a.fingerprint() == b.fingerprint()
            }
            _ => false,
        };
        if same {
            Ok(())
        } else {
            Err(AuditError::BinningMismatch)
        }
    }

    /// Distance between row `i` of `self` and row `j` of `other`.
    pub fn distance(&self, i: usize, other: &EncodedRecords, j: usize) -> Result<f64> {
        self.compatible(other)?;
        Ok(match (self, other) {
            (EncodedRecords::Binned(a), EncodedRecords::Binned(b)) => {
                f64::from(hamming_distance(a, i, b, j)?)
            }
            (EncodedRecords::Mixed(a), EncodedRecords::Mixed(b)) => {
                gower_distance(a.row(i), b.row(j), a.numeric_mask(), a.weights())
            }
            _ => unreachable!(),
        })
    }

    /// Hashable identity of a row, used to form equivalence classes.
    pub fn row_key(&self, i: usize) -> Vec<u64> {
        match self {
            EncodedRecords::Binned(v) => v.row(i).into_iter().map(u64::from).collect(),
            EncodedRecords::Mixed(v) => v.row(i).iter().map(|x| x.to_bits()).collect(),
        }
    }
}

/// Encoding shared by every dataset in one comparison.
#[derive(Debug, Clone)]
pub struct DistanceSpace {
    mode: DistanceMode,
    coder: RecordCoder,
}

impl DistanceSpace {
    /// Fits the encoding. Bin edges (binned mode) come from `reference`;
    /// the level dictionary covers `reference` and every dataset in `others`.
    /// Columns with zero schema weight are left out.
    pub fn fit(config: &DistanceConfig, reference: &Dataset, others: &[&Dataset]) -> Result<Self> {
        let schema = reference.schema();
        let weights = schema.weights();
        let columns: Vec<usize> = if config.columns.is_empty() {
            (0..schema.len()).filter(|&c| weights[c] > 0.0).collect()
        } else {
            config
                .columns
                .iter()
                .map(|n| schema.require(n))
                .collect::<Result<_>>()?
        };
        if columns.is_empty() {
            return Err(AuditError::InvalidArgument("no columns to compare".into()));
        }
        let coder = match config.mode {
            DistanceMode::HammingBinned => {
                RecordCoder::percentile(reference, others, columns, config.n_bins)?
            }
            DistanceMode::EnhancedGower => {
                let mut all = vec![reference];
                all.extend_from_slice(others);
                let edges = vec![None; columns.len()];
                RecordCoder::new(schema, columns, &all, edges)?
            }
        };
        Ok(DistanceSpace {
            mode: config.mode,
            coder,
        })
    }

    pub fn mode(&self) -> DistanceMode {
        self.mode
    }

    pub fn coder(&self) -> &RecordCoder {
        &self.coder
    }

    pub fn encode(&self, ds: &Dataset) -> Result<EncodedRecords> {
        Ok(match self.mode {
            DistanceMode::HammingBinned => EncodedRecords::Binned(self.coder.binned(ds)?),
            DistanceMode::EnhancedGower => EncodedRecords::Mixed(self.coder.mixed(ds)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborResult {
    pub query_index: usize,
    pub neighbor_index: usize,
    pub distance: f64,
}

/// Lowest-index minimum of a distance over `0..n`, skipping `exclude`.
#[inline]
fn scan_min(n: usize, exclude: Option<usize>, mut dist: impl FnMut(usize) -> f64) -> (usize, f64) {
    let mut best = f64::INFINITY;
    let mut best_j = usize::MAX;
    for j in 0..n {
        if Some(j) == exclude {
            continue;
        }
        let d = dist(j);
        if d < best {
            best = d;
            best_j = j;
            if d <= 0.0 {
                break;
            }
        }
    }
    (best_j, best)
}

#[inline]
fn scan_codes<T: Copy + PartialEq>(
    query: &[T],
    target: &[T],
    width: usize,
    exclude: Option<usize>,
) -> (usize, u32) {
    let mut best = u32::MAX;
    let mut best_j = usize::MAX;
    for (j, row) in target.chunks_exact(width).enumerate() {
        let d = count_diff(query, row);
        if d < best && Some(j) != exclude {
            best = d;
            best_j = j;
            if d == 0 {
                break;
            }
        }
    }
    (best_j, best)
}

fn nearest_unchecked(
    query: &EncodedRecords,
    qi: usize,
    target: &EncodedRecords,
    exclude: Option<usize>,
) -> NeighborResult {
    let (j, d) = match (query, target) {
        (EncodedRecords::Binned(q), EncodedRecords::Binned(t)) => {
            let w = q.width();
            let (j, d) = match (q.codes(), t.codes()) {
                (Codes::U8(a), Codes::U8(b)) => scan_codes(&a[qi * w..(qi + 1) * w], b, w, exclude),
                (Codes::U16(a), Codes::U16(b)) => {
                    scan_codes(&a[qi * w..(qi + 1) * w], b, w, exclude)
                }
                (Codes::U32(a), Codes::U32(b)) => {
                    scan_codes(&a[qi * w..(qi + 1) * w], b, w, exclude)
                }
                _ => unreachable!("compatibility checked"),
            };
            (j, f64::from(d))
        }
        (EncodedRecords::Mixed(q), EncodedRecords::Mixed(t)) => {
            let row = q.row(qi);
            let (mask, weights) = (q.numeric_mask(), q.weights());
            scan_min(t.len(), exclude, |j| {
                gower_distance(row, t.row(j), mask, weights)
            })
        }
        _ => unreachable!("compatibility checked"),
    };
    NeighborResult {
        query_index: qi,
        neighbor_index: j,
        distance: d,
    }
}

/// Exhaustive nearest neighbor of query row `qi` within `target`. Ties go to
/// the lowest target index.
pub fn nearest_record(
    query: &EncodedRecords,
    qi: usize,
    target: &EncodedRecords,
    exclude_index: Option<usize>,
) -> Result<NeighborResult> {
    query.compatible(target)?;
    let needed = if exclude_index.is_some_and(|e| e < target.len()) {
        2
    } else {
        1
    };
    if target.len() < needed {
        return Err(AuditError::EmptyTarget);
    }
    if qi >= query.len() {
        return Err(AuditError::InvalidArgument(format!(
            "query row {qi} out of range"
        )));
    }
    Ok(nearest_unchecked(query, qi, target, exclude_index))
}

/// Progress callback receiving `(queries_done, queries_total)`.
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

const CHUNK: usize = 64;

/// Nearest neighbor of every query row. In `self_mode` the queries are the
/// target itself and each row skips its own index. Output order and values do
/// not depend on how the work is split across threads.
pub fn all_nearest(
    queries: &EncodedRecords,
    target: &EncodedRecords,
    self_mode: bool,
    progress: Option<Progress<'_>>,
) -> Result<Vec<NeighborResult>> {
    queries.compatible(target)?;
    if self_mode && queries.len() != target.len() {
        return Err(AuditError::InvalidArgument(
            "self mode needs queries and target to be the same rows".into(),
        ));
    }
    let needed = if self_mode { 2 } else { 1 };
    if target.len() < needed {
        return Err(AuditError::EmptyTarget);
    }
    let n = queries.len();
    let done = AtomicUsize::new(0);
    let chunks: Vec<Vec<NeighborResult>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let out: Vec<NeighborResult> = (lo..hi)
                .map(|i| nearest_unchecked(queries, i, target, self_mode.then_some(i)))
                .collect();
            if let Some(p) = progress {
                let d = done.fetch_add(hi - lo, Ordering::Relaxed) + (hi - lo);
                p(d, n);
            }
            out
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Single-threaded reference for [`all_nearest`].
pub fn all_nearest_sequential(
    queries: &EncodedRecords,
    target: &EncodedRecords,
    self_mode: bool,
) -> Result<Vec<NeighborResult>> {
    (0..queries.len())
        .map(|i| nearest_record(queries, i, target, self_mode.then_some(i)))
        .collect()
}
