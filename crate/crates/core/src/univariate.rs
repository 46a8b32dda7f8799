//! Marginal-distribution fidelity: KS, KL, Wasserstein-1, support coverage.

use serde::{Deserialize, Serialize};

use crate::data::stats::{level_union, MISSING_LEVEL};
use crate::data::{bin_index, percentile_edges, ColumnData, Dataset, MISSING_CODE};
use crate::error::{AuditError, Result};

/// Pseudo-count added to every level when a real level is absent from the
/// synthetic data.
pub const KL_SMOOTHING: f64 = 0.5;
const KOLMOGOROV_TERMS: usize = 100;

fn finite_sorted(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let q = if lambda < 1.18 {
        // theta-transformed series converges fast for small arguments
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let s: f64 = (1..=KOLMOGOROV_TERMS)
            .map(|j| {
                let k = (2 * j - 1) as f64;
                (-k * k * pi2 / (8.0 * lambda * lambda)).exp()
            })
            .sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
    } else {
        let s: f64 = (1..=KOLMOGOROV_TERMS)
            .map(|j| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                let j = j as f64;
                sign * (-2.0 * j * j * lambda * lambda).exp()
            })
            .sum();
        2.0 * s
    };
    q.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_real: usize,
    pub n_synthetic: usize,
}

/// Two-sided two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(real_values: &[f64], syn_values: &[f64]) -> Result<KsResult> {
    let a = finite_sorted(real_values);
    let b = finite_sorted(syn_values);
    if a.is_empty() || b.is_empty() {
        return Err(AuditError::AllMissing(" in a KS sample".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < n1 && a[i] <= x {
            i += 1;
        }
        while j < n2 && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let ne = (n1 as f64 * n2 as f64) / (n1 + n2) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(ne.sqrt() * d),
        n_real: n1,
        n_synthetic: n2,
    })
}

/// KL divergence `sum p ln(p/q)` between two count vectors over the same
/// level order, in nats. When some level observed in the real counts has no
/// synthetic count, every level receives [`KL_SMOOTHING`] pseudo-counts.
pub fn kl_divergence(real_counts: &[f64], syn_counts: &[f64]) -> Result<f64> {
    if real_counts.len() != syn_counts.len() {
        return Err(AuditError::ShapeMismatch(
            real_counts.len(),
            syn_counts.len(),
        ));
    }
    if real_counts
        .iter()
        .chain(syn_counts)
        .any(|c| *c < 0.0 || !c.is_finite())
    {
        return Err(AuditError::InvalidArgument(
            "counts must be finite and ≥ 0".into(),
        ));
    }
    let rt: f64 = real_counts.iter().sum();
    let st: f64 = syn_counts.iter().sum();
    if rt <= 0.0 || st <= 0.0 {
        return Err(AuditError::InvalidArgument(
            "count totals must be positive".into(),
        ));
    }
    let needs_smoothing = real_counts
        .iter()
        .zip(syn_counts)
        .any(|(r, s)| *r > 0.0 && *s == 0.0);
    let alpha = if needs_smoothing { KL_SMOOTHING } else { 0.0 };
    let levels = real_counts.len() as f64;
    let (rd, sd) = (rt + alpha * levels, st + alpha * levels);
    let kl: f64 = real_counts
        .iter()
        .zip(syn_counts)
        .map(|(r, s)| {
            let p = (r + alpha) / rd;
            let q = (s + alpha) / sd;
            if p > 0.0 {
                p * (p / q).ln()
            } else {
                0.0
            }
        })
        .sum();
    Ok(kl.max(0.0))
}

/// Exact Wasserstein-1 distance between two empirical distributions: the
/// integral of `|F_real - F_syn|` over the merged breakpoints.
pub fn wasserstein_1d(real_values: &[f64], syn_values: &[f64]) -> Result<f64> {
    let a = finite_sorted(real_values);
    let b = finite_sorted(syn_values);
    if a.is_empty() || b.is_empty() {
        return Err(AuditError::AllMissing(" in a Wasserstein sample".into()));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / n1 - j as f64 / n2).abs() * (x - prev);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        prev = x;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnCoverage {
    pub column: String,
    pub real_levels: usize,
    pub covered_levels: usize,
    /// Synthetic levels never observed in the real column.
    pub novel_levels: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCoverage {
    pub value: f64,
    pub columns: Vec<ColumnCoverage>,
}

fn observed_levels(col: &ColumnData) -> Vec<&str> {
    match col {
        ColumnData::Categorical { codes, levels } => {
            let mut seen = vec![false; levels.len()];
            for &c in codes {
                if c != MISSING_CODE {
                    seen[c as usize] = true;
                }
            }
            levels
                .iter()
                .zip(seen)
                .filter(|(_, s)| *s)
                .map(|(l, _)| l.as_str())
                .collect()
        }
        ColumnData::Numeric(_) => Vec::new(),
    }
}

/// Mean over columns of the share of real levels that also occur in the
/// synthetic column. Columns whose real data has no observed level are left
/// out of the mean.
pub fn support_coverage(
    real: &Dataset,
    synthetic: &Dataset,
    categorical_columns: &[String],
) -> Result<SupportCoverage> {
    real.ensure_same_schema(synthetic)?;
    let mut columns = Vec::new();
    for name in categorical_columns {
        let idx = real.schema().require(name)?;
        if real.kind(idx).is_numeric() {
            return Err(AuditError::NotCategorical(name.clone()));
        }
        let r = observed_levels(real.column(idx));
        let s = observed_levels(synthetic.column(idx));
        let covered = r.iter().filter(|l| s.contains(l)).count();
        let novel = s.iter().filter(|l| !r.contains(l)).count();
        if r.is_empty() {
            continue;
        }
        columns.push(ColumnCoverage {
            column: name.clone(),
            real_levels: r.len(),
            covered_levels: covered,
            novel_levels: novel,
            ratio: covered as f64 / r.len() as f64,
        });
    }
    let value = if columns.is_empty() {
        1.0
    } else {
        columns.iter().map(|c| c.ratio).sum::<f64>() / columns.len() as f64
    };
    Ok(SupportCoverage { value, columns })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalKind {
    Ks,
    Kl,
    Wasserstein,
    /// Wasserstein after min-max scaling both samples by the real range.
    WassersteinScaled,
    SupportCoverage,
}

/// Paired bin table for plotting real against synthetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedHistogram {
    /// Bin labels; for numerics the interior edges are in `edges`.
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<f64>,
    pub real: Vec<u64>,
    pub synthetic: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalMetric {
    pub column: String,
    pub metric: MarginalKind,
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<PairedHistogram>,
}

fn numeric_histogram(real: &[f64], syn: &[f64], n_bins: usize) -> PairedHistogram {
    let edges = percentile_edges(real, n_bins).unwrap_or_default();
    let bins = edges.len() + 1;
    let count = |v: &[f64]| {
        let mut c = vec![0u64; bins + 1];
        for &x in v {
            if x.is_nan() {
                c[bins] += 1;
            } else {
                c[bin_index(&edges, x)] += 1;
            }
        }
        c
    };
    let mut labels: Vec<String> = (0..bins).map(|b| format!("bin{b}")).collect();
    labels.push(MISSING_LEVEL.to_string());
    PairedHistogram {
        labels,
        real: count(real),
        synthetic: count(syn),
        edges,
    }
}

fn level_counts(col: &ColumnData, order: &[String]) -> Vec<u64> {
    let ColumnData::Categorical { codes, levels } = col else {
        unreachable!()
    };
    let pos: Vec<usize> = levels
        .iter()
        .map(|l| order.iter().position(|o| o == l).unwrap())
        .collect();
    let mut out = vec![0u64; order.len() + 1];
    for &c in codes {
        if c == MISSING_CODE {
            out[order.len()] += 1;
        } else {
            out[pos[c as usize]] += 1;
        }
    }
    out
}

/// Per-column marginal metrics: numerics get Wasserstein (raw and scaled)
/// and KS with p-value; categoricals get KL and support coverage. The first
/// row of each column carries the paired histogram.
pub fn marginal_report(
    real: &Dataset,
    synthetic: &Dataset,
    n_bins: usize,
) -> Result<Vec<MarginalMetric>> {
    real.ensure_same_schema(synthetic)?;
    let mut out = Vec::new();
    for (idx, spec) in real.schema().columns().iter().enumerate() {
        let name = spec.name.clone();
        let row = |metric, value, p_value| MarginalMetric {
            column: name.clone(),
            metric,
            value,
            p_value,
            flag: None,
            histogram: None,
        };
        let mut rows = Vec::new();
        let histogram;
        match (real.column(idx), synthetic.column(idx)) {
            (ColumnData::Numeric(r), ColumnData::Numeric(s)) => {
                histogram = numeric_histogram(r, s, n_bins);
                let rs = finite_sorted(r);
                let ss = finite_sorted(s);
                if rs.is_empty() || ss.is_empty() {
                    let flag = if rs.is_empty() {
                        "real_all_missing"
                    } else {
                        "synthetic_all_missing"
                    };
                    for m in [MarginalKind::Wasserstein, MarginalKind::Ks] {
                        let mut x = row(m, None, None);
                        x.flag = Some(flag.into());
                        rows.push(x);
                    }
                } else {
                    let w = wasserstein_1d(&rs, &ss)?;
                    let range = rs[rs.len() - 1] - rs[0];
                    let scaled = if range > 0.0 { w / range } else { w };
                    let ks = ks_two_sample(&rs, &ss)?;
                    rows.push(row(MarginalKind::Wasserstein, Some(w), None));
                    rows.push(row(MarginalKind::WassersteinScaled, Some(scaled), None));
                    rows.push(row(MarginalKind::Ks, Some(ks.statistic), Some(ks.p_value)));
                }
            }
            (
                rc @ ColumnData::Categorical { levels: rl, .. },
                sc @ ColumnData::Categorical { levels: sl, .. },
            ) => {
                let order = level_union(rl, sl);
                let r = level_counts(rc, &order);
                let s = level_counts(sc, &order);
                let rf: Vec<f64> = r.iter().map(|&x| x as f64).collect();
                let sf: Vec<f64> = s.iter().map(|&x| x as f64).collect();
                let syn_missing_only = s[..order.len()].iter().all(|&x| x == 0);
                let mut kl = match kl_divergence(&rf, &sf) {
                    Ok(v) => row(MarginalKind::Kl, Some(v), None),
                    Err(_) => row(MarginalKind::Kl, None, None),
                };
                if syn_missing_only && !order.is_empty() {
                    kl.flag = Some("synthetic_all_missing".into());
                }
                rows.push(kl);
                let cov = support_coverage(real, synthetic, std::slice::from_ref(&name))?;
                if let Some(c) = cov.columns.first() {
                    rows.push(row(MarginalKind::SupportCoverage, Some(c.ratio), None));
                }
                let mut labels = order;
                labels.push(MISSING_LEVEL.to_string());
                histogram = PairedHistogram {
                    labels,
                    edges: Vec::new(),
                    real: r,
                    synthetic: s,
                };
            }
            _ => unreachable!("schemas are equal"),
        }
        rows[0].histogram = Some(histogram);
        out.extend(rows);
    }
    Ok(out)
}
