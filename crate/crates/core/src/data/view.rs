//! Shared encodings of one or more datasets for record-level comparison.
//!
//! Level ids are interned per dataset, so comparing records of two files
//! needs a common dictionary. [`RecordCoder`] builds one from every dataset
//! that will take part, and (optionally) per-column numeric bin edges fitted
//! on a reference dataset. Code 0 is reserved for a missing cell in every
//! coded column.

use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};

use crate::data::binning::{bin_index, percentile_edges, select_jenks};
use crate::data::dataset::{ColumnData, Dataset, MISSING_CODE};
use crate::data::schema::Schema;
use crate::error::{AuditError, Result};

pub const MISSING_BIN: u32 = 0;

#[derive(Debug, Clone)]
enum ColumnCoding {
    Levels {
        lookup: HashMap<String, u32>,
        names: Vec<String>,
    },
    Numeric {
        edges: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone)]
pub struct RecordCoder {
    schema: Schema,
    columns: Vec<usize>,
    coding: Vec<ColumnCoding>,
    fingerprint: u64,
}

impl RecordCoder {
    /// Builds a coder over `columns` of `schema`. Level dictionaries are the
    /// union over `datasets` in order; `edges[i]` bins the i-th selected
    /// column when it is numeric.
    pub fn new(
        schema: &Schema,
        columns: Vec<usize>,
        datasets: &[&Dataset],
        mut edges: Vec<Option<Vec<f64>>>,
    ) -> Result<Self> {
        if edges.len() != columns.len() {
            return Err(AuditError::InvalidArgument(
                "one edge slot per selected column required".into(),
            ));
        }
        for ds in datasets {
            if ds.schema() != schema {
                return Err(AuditError::SchemaMismatch(
                    "coder datasets must share the schema".into(),
                ));
            }
        }
        let mut coding = Vec::with_capacity(columns.len());
        for (slot, &c) in columns.iter().enumerate() {
            if c >= schema.len() {
                return Err(AuditError::InvalidArgument(format!("column index {c}")));
            }
            if schema.column(c).kind.is_numeric() {
                coding.push(ColumnCoding::Numeric {
                    edges: edges[slot].take(),
                });
            } else {
                let mut lookup = HashMap::new();
                let mut names = Vec::new();
                for ds in datasets {
                    if let ColumnData::Categorical { levels, .. } = ds.column(c) {
                        for l in levels {
                            if !lookup.contains_key(l) {
                                names.push(l.clone());
                                lookup.insert(l.clone(), names.len() as u32);
                            }
                        }
                    }
                }
                coding.push(ColumnCoding::Levels { lookup, names });
            }
        }
        let mut h = DefaultHasher::new();
        columns.hash(&mut h);
        for c in &coding {
            match c {
                ColumnCoding::Levels { names, .. } => names.hash(&mut h),
                ColumnCoding::Numeric { edges } => {
                    for e in edges.iter().flatten() {
                        e.to_bits().hash(&mut h);
                    }
                    edges.is_some().hash(&mut h);
                }
            }
        }
        Ok(RecordCoder {
            schema: schema.clone(),
            columns,
            coding,
            fingerprint: h.finish(),
        })
    }

    /// All columns; numerics kept as raw values.
    pub fn raw(schema: &Schema, datasets: &[&Dataset]) -> Result<Self> {
        let cols: Vec<usize> = (0..schema.len()).collect();
        let edges = vec![None; cols.len()];
        Self::new(schema, cols, datasets, edges)
    }

    /// Selected columns with numerics cut at percentile edges of `reference`.
    /// A numeric column with no values in `reference` gets a single bin.
    pub fn percentile(
        reference: &Dataset,
        others: &[&Dataset],
        columns: Vec<usize>,
        n_bins: usize,
    ) -> Result<Self> {
        let edges = columns
            .iter()
            .map(|&c| match reference.column(c) {
                ColumnData::Numeric(v) => match percentile_edges(v, n_bins) {
                    Ok(e) => Ok(Some(e)),
                    Err(AuditError::AllMissing(_)) => Ok(Some(Vec::new())),
                    Err(e) => Err(e),
                },
                _ => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut all = vec![reference];
        all.extend_from_slice(others);
        Self::new(reference.schema(), columns, &all, edges)
    }

    /// Selected columns with numerics cut at Jenks natural breaks of
    /// `reference`, choosing the first class count whose fit reaches
    /// `gvf_threshold`.
    pub fn jenks(
        reference: &Dataset,
        others: &[&Dataset],
        columns: Vec<usize>,
        gvf_threshold: f64,
        k_max: usize,
    ) -> Result<Self> {
        let edges = columns
            .iter()
            .map(|&c| match reference.column(c) {
                ColumnData::Numeric(v) => match select_jenks(v, gvf_threshold, k_max) {
                    Ok(b) => Ok(Some(b.edges)),
                    Err(AuditError::AllMissing(_)) => Ok(Some(Vec::new())),
                    Err(e) => Err(e),
                },
                _ => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut all = vec![reference];
        all.extend_from_slice(others);
        Self::new(reference.schema(), columns, &all, edges)
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Bin edges of each selected numeric column (`None` for categoricals
    /// and raw numerics).
    pub fn bin_edges(&self) -> Vec<Option<&[f64]>> {
        self.coding
            .iter()
            .map(|c| match c {
                ColumnCoding::Numeric { edges } => edges.as_deref(),
                ColumnCoding::Levels { .. } => None,
            })
            .collect()
    }

    /// Level name for a code of the `slot`-th selected categorical column.
    pub fn level_name(&self, slot: usize, code: u32) -> Option<&str> {
        match &self.coding[slot] {
            ColumnCoding::Levels { names, .. } if code > 0 => {
                names.get(code as usize - 1).map(String::as_str)
            }
            _ => None,
        }
    }

    /// Code of a level text in the `slot`-th selected categorical column.
    pub fn level_code(&self, slot: usize, level: &str) -> Option<u32> {
        match &self.coding[slot] {
            ColumnCoding::Levels { lookup, .. } => lookup.get(level).copied(),
            _ => None,
        }
    }

    fn check(&self, ds: &Dataset) -> Result<()> {
        if ds.schema() != &self.schema {
            return Err(AuditError::SchemaMismatch(
                "dataset schema differs from the coder's".into(),
            ));
        }
        Ok(())
    }

    /// Remaps a dataset's level ids to coder codes (0 = missing).
    fn level_map(&self, slot: usize, ds: &Dataset) -> Result<Vec<u32>> {
        let ColumnCoding::Levels { lookup, .. } = &self.coding[slot] else {
            unreachable!()
        };
        let ColumnData::Categorical { levels, .. } = ds.column(self.columns[slot]) else {
            unreachable!()
        };
        levels
            .iter()
            .map(|l| {
                lookup.get(l).copied().ok_or_else(|| {
                    AuditError::InvalidArgument(format!(
                        "level `{l}` of `{}` was not seen when the coder was built",
                        self.schema.column(self.columns[slot]).name
                    ))
                })
            })
            .collect()
    }

    /// Per-column coded cells of one dataset.
    fn coded_columns(&self, ds: &Dataset) -> Result<Vec<Vec<u32>>> {
        let mut out = Vec::with_capacity(self.columns.len());
        for (slot, &c) in self.columns.iter().enumerate() {
            let col = match (&self.coding[slot], ds.column(c)) {
                (ColumnCoding::Levels { .. }, ColumnData::Categorical { codes, .. }) => {
                    let map = self.level_map(slot, ds)?;
                    codes
                        .iter()
                        .map(|&x| {
                            if x == MISSING_CODE {
                                MISSING_BIN
                            } else {
                                map[x as usize]
                            }
                        })
                        .collect()
                }
                (ColumnCoding::Numeric { edges: Some(e) }, ColumnData::Numeric(v)) => v
                    .iter()
                    .map(|&x| {
                        if x.is_nan() {
                            MISSING_BIN
                        } else {
                            bin_index(e, x) as u32 + 1
                        }
                    })
                    .collect(),
                (ColumnCoding::Numeric { edges: None }, _) => {
                    return Err(AuditError::InvalidArgument(format!(
                        "numeric column `{}` has no bin edges",
                        self.schema.column(c).name
                    )))
                }
                _ => unreachable!("schema checked"),
            };
            out.push(col);
        }
        Ok(out)
    }

    fn max_code(&self) -> u32 {
        self.coding
            .iter()
            .map(|c| match c {
                ColumnCoding::Levels { names, .. } => names.len() as u32,
                ColumnCoding::Numeric { edges } => edges.as_ref().map_or(0, |e| e.len() as u32 + 1),
            })
            .max()
            .unwrap_or(0)
    }

    /// Fully categorical view: every selected numeric column must be binned.
    pub fn binned(&self, ds: &Dataset) -> Result<BinnedView> {
        self.check(ds)?;
        let cols = self.coded_columns(ds)?;
        let width = cols.len();
        let rows = ds.row_count();
        let mut flat = vec![0u32; rows * width];
        for (c, col) in cols.iter().enumerate() {
            for (r, &v) in col.iter().enumerate() {
                flat[r * width + c] = v;
            }
        }
        let codes = match self.max_code() {
            m if m <= u8::MAX as u32 => Codes::U8(flat.iter().map(|&x| x as u8).collect()),
            m if m <= u16::MAX as u32 => Codes::U16(flat.iter().map(|&x| x as u16).collect()),
            _ => Codes::U32(flat),
        };
        Ok(BinnedView {
            fingerprint: self.fingerprint,
            width,
            rows,
            codes,
        })
    }

    /// Mixed view: categorical codes plus raw numeric values (NaN = missing).
    pub fn mixed(&self, ds: &Dataset) -> Result<MixedView> {
        self.check(ds)?;
        let width = self.columns.len();
        let rows = ds.row_count();
        let weights_all = self.schema.weights();
        let mut cells = vec![0.0f64; rows * width];
        let mut numeric = Vec::with_capacity(width);
        for (slot, &c) in self.columns.iter().enumerate() {
            match (&self.coding[slot], ds.column(c)) {
                (ColumnCoding::Numeric { .. }, ColumnData::Numeric(v)) => {
                    numeric.push(true);
                    for (r, &x) in v.iter().enumerate() {
                        cells[r * width + slot] = x;
                    }
                }
                (ColumnCoding::Levels { .. }, ColumnData::Categorical { codes, .. }) => {
                    numeric.push(false);
                    let map = self.level_map(slot, ds)?;
                    for (r, &x) in codes.iter().enumerate() {
                        let code = if x == MISSING_CODE {
                            MISSING_BIN
                        } else {
                            map[x as usize]
                        };
                        cells[r * width + slot] = f64::from(code);
                    }
                }
                _ => unreachable!("schema checked"),
            }
        }
        Ok(MixedView {
            fingerprint: self.fingerprint,
            width,
            rows,
            numeric,
            weights: self.columns.iter().map(|&c| weights_all[c]).collect(),
            cells,
        })
    }
}

/// Row-major code storage, narrowed to the smallest integer type that holds
/// every code of the coder.
#[derive(Debug, Clone)]
pub enum Codes {
    U8(Vec<u8>),
    U16(Vec<u16>),
    U32(Vec<u32>),
}

/// Dataset with every selected column discretized to a small integer code.
#[derive(Debug, Clone)]
pub struct BinnedView {
    fingerprint: u64,
    width: usize,
    rows: usize,
    codes: Codes,
}

impl BinnedView {
    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn codes(&self) -> &Codes {
        &self.codes
    }

    #[inline]
    pub fn code(&self, row: usize, col: usize) -> u32 {
        let i = row * self.width + col;
        match &self.codes {
            Codes::U8(v) => u32::from(v[i]),
            Codes::U16(v) => u32::from(v[i]),
            Codes::U32(v) => v[i],
        }
    }

    pub fn row(&self, row: usize) -> Vec<u32> {
        (0..self.width).map(|c| self.code(row, c)).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> BinnedView {
        fn take<T: Copy>(v: &[T], w: usize, rows: &[usize]) -> Vec<T> {
            rows.iter()
                .flat_map(|&r| v[r * w..(r + 1) * w].iter().copied())
                .collect()
        }
        let codes = match &self.codes {
            Codes::U8(v) => Codes::U8(take(v, self.width, rows)),
            Codes::U16(v) => Codes::U16(take(v, self.width, rows)),
            Codes::U32(v) => Codes::U32(take(v, self.width, rows)),
        };
        BinnedView {
            fingerprint: self.fingerprint,
            width: self.width,
            rows: rows.len(),
            codes,
        }
    }
}

/// Dataset with categorical codes and raw numerics side by side.
#[derive(Debug, Clone)]
pub struct MixedView {
    fingerprint: u64,
    width: usize,
    rows: usize,
    numeric: Vec<bool>,
    weights: Vec<f64>,
    cells: Vec<f64>,
}

impl MixedView {
    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn numeric_mask(&self) -> &[bool] {
        &self.numeric
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.cells[row * self.width..(row + 1) * self.width]
    }

    pub fn select_rows(&self, rows: &[usize]) -> MixedView {
        MixedView {
            cells: rows
                .iter()
                .flat_map(|&r| self.row(r).iter().copied())
                .collect(),
            rows: rows.len(),
            ..self.clone()
        }
    }
}
