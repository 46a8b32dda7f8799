use serde::{Deserialize, Serialize};

use crate::data::stats::level_union;
use crate::data::{ColumnData, Dataset, MISSING_CODE};
use crate::error::{AuditError, Result};

/// Square correlation matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub size: usize,
    pub values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrixPair {
    pub variables: Vec<String>,
    pub real: CorrelationMatrix,
    pub synthetic: CorrelationMatrix,
    /// Variables that are constant (or empty) in the real or synthetic data;
    /// their off-diagonal correlations are reported as 0.
    pub constant_variables: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pcd {
    /// Mean absolute difference over the strict upper triangle.
    pub pcd_l1_mean: f64,
    /// Root-mean-square difference over the strict upper triangle.
    pub pcd_l2: f64,
    /// Sum of absolute differences over the full matrix.
    pub pcd_l1_raw: f64,
}

/// Pearson correlation over pairwise-complete observations; `None` when a
/// side has zero variance or fewer than two complete pairs.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| !a.is_nan() && !b.is_nan())
        .map(|(a, b)| (*a, *b))
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Expands the columns into variables: numerics as-is, categoricals as one
/// indicator per level in `levels` (missing cells are NaN).
fn expand(
    ds: &Dataset,
    columns: &[String],
    level_sets: &[Option<Vec<String>>],
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (name, lv) in columns.iter().zip(level_sets) {
        let (_, col) = ds.column_by_name(name)?;
        match (col, lv) {
            (ColumnData::Numeric(v), None) => out.push(v.clone()),
            (ColumnData::Categorical { codes, levels }, Some(order)) => {
                for l in order {
                    let code = levels.iter().position(|x| x == l).map(|c| c as u32);
                    out.push(
                        codes
                            .iter()
                            .map(|&c| {
                                if c == MISSING_CODE {
                                    f64::NAN
                                } else {
                                    f64::from(u8::from(Some(c) == code))
                                }
                            })
                            .collect(),
                    );
                }
            }
            _ => unreachable!("kinds agree with the schema"),
        }
    }
    Ok(out)
}

fn matrix(vars: &[Vec<f64>], constant: &mut [bool]) -> CorrelationMatrix {
    let k = vars.len();
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        values[i * k + i] = 1.0;
        for j in i + 1..k {
            let r = match pearson(&vars[i], &vars[j]) {
                Some(r) => r,
                None => {
                    for v in [i, j] {
                        if pearson(&vars[v], &vars[v]).is_none() {
                            constant[v] = true;
                        }
                    }
                    0.0
                }
            };
            values[i * k + j] = r;
            values[j * k + i] = r;
        }
    }
    CorrelationMatrix { size: k, values }
}

/// Real and synthetic correlation matrices over the same variable set.
/// Categorical columns are expanded to indicators over the union of levels.
pub fn correlation_pair(
    real: &Dataset,
    synthetic: &Dataset,
    columns: &[String],
) -> Result<CorrelationMatrixPair> {
    real.ensure_same_schema(synthetic)?;
    if columns.len() < 2 {
        return Err(AuditError::TooFewColumns {
            needed: 2,
            got: columns.len(),
        });
    }
    let mut level_sets = Vec::new();
    let mut names = Vec::new();
    for c in columns {
        let idx = real.schema().require(c)?;
        match (real.column(idx), synthetic.column(idx)) {
            (
                ColumnData::Categorical { levels: a, .. },
                ColumnData::Categorical { levels: b, .. },
            ) => {
                let order = level_union(a, b);
                names.extend(order.iter().map(|l| format!("{c}={l}")));
                level_sets.push(Some(order));
            }
            _ => {
                names.push(c.clone());
                level_sets.push(None);
            }
        }
    }
    let rv = expand(real, columns, &level_sets)?;
    let sv = expand(synthetic, columns, &level_sets)?;
    let mut constant = vec![false; names.len()];
    let r = matrix(&rv, &mut constant);
    let s = matrix(&sv, &mut constant);
    Ok(CorrelationMatrixPair {
        constant_variables: names
            .iter()
            .zip(&constant)
            .filter(|(_, c)| **c)
            .map(|(n, _)| n.clone())
            .collect(),
        variables: names,
        real: r,
        synthetic: s,
    })
}

/// Pairwise correlation difference between two matrices of equal size.
pub fn pcd_matrices(a: &CorrelationMatrix, b: &CorrelationMatrix) -> Result<Pcd> {
    if a.size != b.size {
        return Err(AuditError::ShapeMismatch(a.size, b.size));
    }
    let k = a.size;
    let (mut l1, mut l2, mut m) = (0.0, 0.0, 0usize);
    for i in 0..k {
        for j in i + 1..k {
            let d = a.get(i, j) - b.get(i, j);
            l1 += d.abs();
            l2 += d * d;
            m += 1;
        }
    }
    let raw: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .sum();
    if m == 0 {
        return Ok(Pcd {
            pcd_l1_mean: 0.0,
            pcd_l2: 0.0,
            pcd_l1_raw: raw,
        });
    }
    Ok(Pcd {
        pcd_l1_mean: l1 / m as f64,
        pcd_l2: (l2 / m as f64).sqrt(),
        pcd_l1_raw: raw,
    })
}

pub fn pcd(pair: &CorrelationMatrixPair) -> Result<Pcd> {
    pcd_matrices(&pair.real, &pair.synthetic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnSpec, Schema};
    use rand::{Rng, SeedableRng};

    fn cov_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov = x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / (n - 1.0);
        let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        cov / (sx * sy)
    }

    #[test]
    fn matches_covariance_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let cols: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..50).map(|_| rng.random_range(-10.0..10.0)).collect())
                .collect();
            for i in 0..5 {
                for j in 0..5 {
                    let r = pearson(&cols[i], &cols[j]).unwrap();
                    assert!((r - cov_oracle(&cols[i], &cols[j])).abs() < 1e-12);
                }
            }
        }
    }

    fn mixed() -> Dataset {
        let s = Schema::new(vec![
            ColumnSpec::numeric("x"),
            ColumnSpec::numeric("y"),
            ColumnSpec::categorical("c"),
            ColumnSpec::numeric("k"),
        ])
        .unwrap();
        Dataset::from_records(
            s,
            [
                ["1", "2", "a", "5"],
                ["2", "4.5", "b", "5"],
                ["3", "", "a", "5"],
                ["4", "7", "b", "5"],
            ],
        )
        .unwrap()
    }

    #[test]
    fn identical_inputs_give_zero_pcd() {
        let d = mixed();
        let cols: Vec<String> = ["x", "y", "c", "k"].map(String::from).to_vec();
        let p = correlation_pair(&d, &d, &cols).unwrap();
        assert_eq!(p.real, p.synthetic);
        assert_eq!(p.variables, ["x", "y", "c=a", "c=b", "k"]);
        assert_eq!(p.constant_variables, ["k"]);
        assert_eq!(p.real.get(0, 0), 1.0);
        assert_eq!(p.real.get(0, 4), 0.0);
        assert!(p.real.values.iter().all(|v| v.is_finite()));
        let r = pcd(&p).unwrap();
        assert_eq!((r.pcd_l1_mean, r.pcd_l2, r.pcd_l1_raw), (0.0, 0.0, 0.0));
        assert!(correlation_pair(&d, &d, &cols[..1]).is_err());
    }

    #[test]
    fn pcd_hand_values_and_symmetry() {
        let a = CorrelationMatrix {
            size: 3,
            values: vec![1.0, 0.5, 0.0, 0.5, 1.0, -0.2, 0.0, -0.2, 1.0],
        };
        let b = CorrelationMatrix {
            size: 3,
            values: vec![1.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.0],
        };
        let p = pcd_matrices(&a, &b).unwrap();
        assert!((p.pcd_l1_mean - 0.1).abs() < 1e-15);
        assert!((p.pcd_l2 - (0.05f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((p.pcd_l1_raw - 0.6).abs() < 1e-15);
        assert_eq!(pcd_matrices(&b, &a).unwrap(), p);
        let c = CorrelationMatrix {
            size: 1,
            values: vec![1.0],
        };
        assert!(matches!(
            pcd_matrices(&a, &c),
            Err(AuditError::ShapeMismatch(3, 1))
        ));
    }
}
