use serde::{Deserialize, Serialize};

use crate::data::{ColumnData, Dataset, MISSING_CODE};
use crate::error::{AuditError, Result};

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub names: Vec<String>,
    /// Source column of each feature.
    pub parents: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let w = self.width();
        let mut values = Vec::with_capacity(rows.len() * w);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            rows: rows.len(),
            names: self.names.clone(),
            parents: self.parents.clone(),
            values,
        }
    }

    /// Writes the matrix as CSV with a header row.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for i in 0..self.rows {
            w.write_record(self.row(i).iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| AuditError::io("<csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum EncodedColumn {
    Categorical { name: String, levels: Vec<String> },
    Numeric { name: String, mean: f64, scale: f64 },
}

/// One-hot and standardizing encoder fitted on a subset of rows.
///
/// Categorical columns become one indicator per level seen in the fit rows
/// plus a missing indicator that also absorbs unseen levels. Numeric
/// columns are standardized with the fit-row mean and SD, missing cells
/// are set to 0 and flagged by a companion indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    columns: Vec<EncodedColumn>,
}

impl Encoder {
    pub fn fit(ds: &Dataset, columns: &[String], fit_rows: &[usize]) -> Result<Self> {
        if fit_rows.is_empty() {
            return Err(AuditError::EmptyInput("encoder fit rows".into()));
        }
        let mut out = Vec::with_capacity(columns.len());
        for name in columns {
            let (_, col) = ds.column_by_name(name)?;
            out.push(match col {
                ColumnData::Categorical { codes, levels } => {
                    let mut seen = vec![false; levels.len()];
                    let mut order = Vec::new();
                    for &r in fit_rows {
                        let c = codes[r];
                        if c != MISSING_CODE && !seen[c as usize] {
                            seen[c as usize] = true;
                            order.push(levels[c as usize].clone());
                        }
                    }
                    EncodedColumn::Categorical {
                        name: name.clone(),
                        levels: order,
                    }
                }
                ColumnData::Numeric(v) => {
                    let vals: Vec<f64> = fit_rows.iter().map(|&r| v[r]).collect();
                    let (mean, sd) = crate::data::stats::mean_sd(&vals);
                    let scale = match sd {
                        Some(s) if s > 0.0 => s,
                        _ => 1.0,
                    };
                    EncodedColumn::Numeric {
                        name: name.clone(),
                        mean: mean.unwrap_or(0.0),
                        scale,
                    }
                }
            });
        }
        Ok(Encoder { columns: out })
    }

    pub fn feature_names(&self) -> (Vec<String>, Vec<String>) {
        let mut names = Vec::new();
        let mut parents = Vec::new();
        for col in &self.columns {
            match col {
                EncodedColumn::Categorical { name, levels } => {
                    for l in levels {
                        names.push(format!("{name}={l}"));
                        parents.push(name.clone());
                    }
                    names.push(format!("{name}=<missing>"));
                    parents.push(name.clone());
                }
                EncodedColumn::Numeric { name, .. } => {
                    names.push(name.clone());
                    names.push(format!("{name}:missing"));
                    parents.push(name.clone());
                    parents.push(name.clone());
                }
            }
        }
        (names, parents)
    }

    pub fn transform(&self, ds: &Dataset) -> Result<FeatureMatrix> {
        let (names, parents) = self.feature_names();
        let width = names.len();
        let n = ds.row_count();
        let mut values = vec![0.0; n * width];
        let mut offset = 0;
        for col in &self.columns {
            match col {
                EncodedColumn::Categorical { name, levels } => {
                    let (_, data) = ds.column_by_name(name)?;
                    let ColumnData::Categorical {
                        codes,
                        levels: ds_levels,
                    } = data
                    else {
                        return Err(AuditError::NotCategorical(name.clone()));
                    };
                    let missing_slot = levels.len();
                    let map: Vec<usize> = ds_levels
                        .iter()
                        .map(|l| levels.iter().position(|x| x == l).unwrap_or(missing_slot))
                        .collect();
                    for (r, &c) in codes.iter().enumerate() {
                        let slot = if c == MISSING_CODE {
                            missing_slot
                        } else {
                            map[c as usize]
                        };
                        values[r * width + offset + slot] = 1.0;
                    }
                    offset += levels.len() + 1;
                }
                EncodedColumn::Numeric { name, mean, scale } => {
                    let (_, data) = ds.column_by_name(name)?;
                    let ColumnData::Numeric(v) = data else {
                        return Err(AuditError::NotNumeric(name.clone()));
                    };
                    for (r, &x) in v.iter().enumerate() {
                        if x.is_nan() {
                            values[r * width + offset + 1] = 1.0;
                        } else {
                            values[r * width + offset] = (x - mean) / scale;
                        }
                    }
                    offset += 2;
                }
            }
        }
        Ok(FeatureMatrix {
            rows: n,
            names,
            parents,
            values,
        })
    }
}

/// Fits an encoder on `fit_rows` and transforms every row of `ds`.
pub fn encode(
    ds: &Dataset,
    columns: &[String],
    fit_rows: &[usize],
) -> Result<(Encoder, FeatureMatrix)> {
    let enc = Encoder::fit(ds, columns, fit_rows)?;
    let fm = enc.transform(ds)?;
    Ok((enc, fm))
}
