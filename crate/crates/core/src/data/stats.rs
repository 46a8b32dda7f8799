use serde::{Deserialize, Serialize};

use crate::data::dataset::{ColumnData, Dataset, MISSING_CODE};
use crate::error::Result;

/// Label used for the missing pseudo-level in categorical summaries.
pub const MISSING_LEVEL: &str = "<missing>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSummary {
    pub count: usize,
    pub missing: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelShare {
    pub level: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnSummary {
    Numeric {
        column: String,
        real: NumericSummary,
        synthetic: NumericSummary,
    },
    Categorical {
        column: String,
        /// Rows share level order: real first-seen, then synthetic-only
        /// levels, then the missing pseudo-level.
        real: Vec<LevelShare>,
        synthetic: Vec<LevelShare>,
    },
}

/// Neumaier-compensated sum of an ascending-sorted slice.
fn sorted_sum(sorted: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in sorted {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and sample SD (n−1 denominator), both independent of input order.
pub fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return (None, None);
    }
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = sorted_sum(&v) / n;
    if v.len() < 2 {
        return (Some(mean), None);
    }
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_by(f64::total_cmp);
    (Some(mean), Some((sorted_sum(&dev) / (n - 1.0)).sqrt()))
}

pub fn numeric_summary(values: &[f64]) -> NumericSummary {
    let missing = values.iter().filter(|v| v.is_nan()).count();
    let (mean, sd) = mean_sd(values);
    NumericSummary {
        count: values.len() - missing,
        missing,
        mean,
        sd,
    }
}

/// Counts per level text (plus missing), in the order given by `order`.
fn level_shares(codes: &[u32], levels: &[String], order: &[String]) -> Vec<LevelShare> {
    let mut counts = vec![0usize; levels.len()];
    let mut missing = 0usize;
    for &c in codes {
        if c == MISSING_CODE {
            missing += 1;
        } else {
            counts[c as usize] += 1;
        }
    }
    let total = codes.len().max(1) as f64;
    let mut out: Vec<LevelShare> = order
        .iter()
        .map(|name| {
            let count = levels
                .iter()
                .position(|l| l == name)
                .map_or(0, |i| counts[i]);
            LevelShare {
                level: name.clone(),
                count,
                percent: 100.0 * count as f64 / total,
            }
        })
        .collect();
    out.push(LevelShare {
        level: MISSING_LEVEL.to_string(),
        count: missing,
        percent: 100.0 * missing as f64 / total,
    });
    out
}

/// Union of level names: `a`'s order, then levels only in `b`.
pub(crate) fn level_union(a: &[String], b: &[String]) -> Vec<String> {
    let mut out = a.to_vec();
    for l in b {
        if !out.contains(l) {
            out.push(l.clone());
        }
    }
    out
}

/// Per-column population statistics for a real/synthetic pair.
pub fn population_stats(real: &Dataset, synthetic: &Dataset) -> Result<Vec<ColumnSummary>> {
    real.ensure_same_schema(synthetic)?;
    let mut out = Vec::with_capacity(real.column_count());
    for (idx, spec) in real.schema().columns().iter().enumerate() {
        let summary = match (real.column(idx), synthetic.column(idx)) {
            (ColumnData::Numeric(r), ColumnData::Numeric(s)) => ColumnSummary::Numeric {
                column: spec.name.clone(),
                real: numeric_summary(r),
                synthetic: numeric_summary(s),
            },
            (
                ColumnData::Categorical {
                    codes: rc,
                    levels: rl,
                },
                ColumnData::Categorical {
                    codes: sc,
                    levels: sl,
                },
            ) => {
                let order = level_union(rl, sl);
                ColumnSummary::Categorical {
                    column: spec.name.clone(),
                    real: level_shares(rc, rl, &order),
                    synthetic: level_shares(sc, sl, &order),
                }
            }
            _ => unreachable!("schemas are equal"),
        };
        out.push(summary);
    }
    Ok(out)
}
