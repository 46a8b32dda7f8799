use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::data::stats::level_union;
use crate::data::{ColumnData, Dataset, MISSING_CODE};
use crate::error::{AuditError, Result};

/// Product-limit survival estimate evaluated at each distinct event time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
}

impl SurvivalCurve {
    /// Right-continuous step value at `t`.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t);
        if k == 0 {
            1.0
        } else {
            self.survival[k - 1]
        }
    }
}

fn check(times: &[f64], events: &[bool]) -> Result<()> {
    if times.len() != events.len() {
        return Err(AuditError::ShapeMismatch(times.len(), events.len()));
    }
    if let Some(&t) = times.iter().find(|t| **t < 0.0 || t.is_nan()) {
        return Err(AuditError::NegativeTime(t));
    }
    Ok(())
}

fn sorted(times: &[f64], events: &[bool]) -> Vec<(f64, bool)> {
    let mut v: Vec<(f64, bool)> = times.iter().copied().zip(events.iter().copied()).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

pub fn kaplan_meier(times: &[f64], events: &[bool]) -> Result<SurvivalCurve> {
    check(times, events)?;
    let data = sorted(times, events);
    let mut curve = SurvivalCurve {
        times: Vec::new(),
        survival: Vec::new(),
        at_risk: Vec::new(),
        events: Vec::new(),
    };
    let mut s = 1.0;
    let mut i = 0;
    while i < data.len() {
        let t = data[i].0;
        let n = data.len() - i;
        let mut d = 0;
        while i < data.len() && data[i].0 == t {
            d += usize::from(data[i].1);
            i += 1;
        }
        if d > 0 {
            s *= (n - d) as f64 / n as f64;
            curve.times.push(t);
            curve.survival.push(s);
            curve.at_risk.push(n);
            curve.events.push(d);
        }
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRank {
    pub statistic: f64,
    pub p_value: f64,
    pub observed_a: f64,
    pub expected_a: f64,
    pub variance: f64,
}

/// Two-group log-rank test (chi-square, 1 df).
pub fn log_rank(
    a_times: &[f64],
    a_events: &[bool],
    b_times: &[f64],
    b_events: &[bool],
) -> Result<LogRank> {
    check(a_times, a_events)?;
    check(b_times, b_events)?;
    if !a_events.iter().any(|&e| e) || !b_events.iter().any(|&e| e) {
        return Err(AuditError::NoEvents);
    }
    let a = sorted(a_times, a_events);
    let b = sorted(b_times, b_events);
    let (mut ia, mut ib) = (0, 0);
    let (mut obs, mut exp, mut var) = (0.0, 0.0, 0.0);
    while ia < a.len() || ib < b.len() {
        let t = match (a.get(ia), b.get(ib)) {
            (Some(x), Some(y)) => x.0.min(y.0),
            (Some(x), None) => x.0,
            (None, Some(y)) => y.0,
            (None, None) => unreachable!(),
        };
        let na = (a.len() - ia) as f64;
        let nb = (b.len() - ib) as f64;
        let (mut da, mut db) = (0.0, 0.0);
        while ia < a.len() && a[ia].0 == t {
            da += f64::from(u8::from(a[ia].1));
            ia += 1;
        }
        while ib < b.len() && b[ib].0 == t {
            db += f64::from(u8::from(b[ib].1));
            ib += 1;
        }
        let d = da + db;
        if d == 0.0 {
            continue;
        }
        let n = na + nb;
        obs += da;
        exp += d * na / n;
        if n > 1.0 {
            var += d * (na / n) * (nb / n) * (n - d) / (n - 1.0);
        }
    }
    let statistic = if var > 0.0 {
        (obs - exp).powi(2) / var
    } else {
        0.0
    };
    Ok(LogRank {
        statistic,
        p_value: erfc((statistic / 2.0).sqrt()).clamp(0.0, 1.0),
        observed_a: obs,
        expected_a: exp,
        variance: var,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSurvival {
    pub group: String,
    pub curve: SurvivalCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSide {
    pub curves: Vec<GroupSurvival>,
    pub log_rank_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalReport {
    pub time_column: String,
    pub group_column: Option<String>,
    pub real: SurvivalSide,
    pub synthetic: SurvivalSide,
}

fn time_event(ds: &Dataset, time_column: &str) -> Result<(Vec<f64>, Vec<bool>)> {
    let idx = ds.schema().require(time_column)?;
    let spec = ds.schema().column(idx);
    let Some(ind) = &spec.event_indicator_column else {
        return Err(AuditError::InvalidArgument(format!(
            "`{time_column}` has no event indicator column"
        )));
    };
    let t = ds.numeric(time_column)?;
    let e = ds.numeric(ind)?;
    Ok((t.to_vec(), e.iter().map(|&v| v == 1.0).collect()))
}

fn side(ds: &Dataset, time_column: &str, groups: &[(String, Vec<usize>)]) -> Result<SurvivalSide> {
    let (t, e) = time_event(ds, time_column)?;
    let keep = |rows: &[usize]| -> (Vec<f64>, Vec<bool>) {
        rows.iter()
            .filter(|&&r| !t[r].is_nan())
            .map(|&r| (t[r], e[r]))
            .unzip()
    };
    let mut curves = Vec::new();
    let mut parts = Vec::new();
    for (name, rows) in groups {
        let (gt, ge) = keep(rows);
        curves.push(GroupSurvival {
            group: name.clone(),
            curve: kaplan_meier(&gt, &ge)?,
        });
        parts.push((gt, ge));
    }
    let log_rank_p = if parts.len() == 2 {
        log_rank(&parts[0].0, &parts[0].1, &parts[1].0, &parts[1].1)
            .ok()
            .map(|r| r.p_value)
    } else {
        None
    };
    Ok(SurvivalSide { curves, log_rank_p })
}

fn groups_of(
    ds: &Dataset,
    group_column: Option<&str>,
    order: &[String],
) -> Result<Vec<(String, Vec<usize>)>> {
    let Some(g) = group_column else {
        return Ok(vec![("all".to_string(), (0..ds.row_count()).collect())]);
    };
    let (_, col) = ds.column_by_name(g)?;
    let ColumnData::Categorical { codes, levels } = col else {
        return Err(AuditError::NotCategorical(g.to_string()));
    };
    Ok(order
        .iter()
        .map(|name| {
            let rows = (0..codes.len())
                .filter(|&r| codes[r] != MISSING_CODE && &levels[codes[r] as usize] == name)
                .collect();
            (name.clone(), rows)
        })
        .collect())
}

/// Kaplan-Meier curves per group and the within-dataset log-rank p-value,
/// side by side for real and synthetic. The log-rank test is reported only
/// for exactly two groups with events in both.
pub fn survival_report(
    real: &Dataset,
    synthetic: &Dataset,
    time_column: &str,
    group_column: Option<&str>,
) -> Result<SurvivalReport> {
    real.ensure_same_schema(synthetic)?;
    let order = match group_column {
        Some(g) => {
            let idx = real.schema().require(g)?;
            match (real.column(idx), synthetic.column(idx)) {
                (
                    ColumnData::Categorical { levels: a, .. },
                    ColumnData::Categorical { levels: b, .. },
                ) => {
                    let mut u = level_union(a, b);
                    u.sort();
                    u
                }
                _ => return Err(AuditError::NotCategorical(g.to_string())),
            }
        }
        None => Vec::new(),
    };
    Ok(SurvivalReport {
        time_column: time_column.to_string(),
        group_column: group_column.map(str::to_string),
        real: side(real, time_column, &groups_of(real, group_column, &order)?)?,
        synthetic: side(
            synthetic,
            time_column,
            &groups_of(synthetic, group_column, &order)?,
        )?,
    })
}
