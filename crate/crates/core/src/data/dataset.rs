use std::collections::HashMap;
use std::path::Path;

use crate::data::schema::{ColumnKind, Schema};
use crate::error::{AuditError, Result};

/// Code used for a missing categorical cell.
pub const MISSING_CODE: u32 = u32::MAX;

/// One column of parsed cells.
///
/// Categorical cells hold indices into `levels` (interned in first-seen
/// order) with [`MISSING_CODE`] for missing. Numeric cells use NaN as the
/// missing sentinel; parsed values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Categorical {
        codes: Vec<u32>,
        levels: Vec<String>,
    },
    Numeric(Vec<f64>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Categorical { codes, .. } => codes.len(),
            ColumnData::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnData::Categorical { codes, .. } => codes[row] == MISSING_CODE,
            ColumnData::Numeric(v) => v[row].is_nan(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&r| self.is_missing(r)).count()
    }

    /// Cell rendered back to text; `None` when missing.
    pub fn text(&self, row: usize) -> Option<String> {
        match self {
            ColumnData::Categorical { codes, levels } => {
                let c = codes[row];
                (c != MISSING_CODE).then(|| levels[c as usize].clone())
            }
            ColumnData::Numeric(v) => (!v[row].is_nan()).then(|| format_number(v[row])),
        }
    }

    fn take(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Categorical { codes, levels } => ColumnData::Categorical {
                codes: rows.iter().map(|&r| codes[r]).collect(),
                levels: levels.clone(),
            },
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
        }
    }
}

pub(crate) fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Column-major immutable table of parsed values.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Schema,
    columns: Vec<ColumnData>,
    row_count: usize,
}

struct ColumnBuilder {
    numeric: bool,
    values: Vec<f64>,
    codes: Vec<u32>,
    levels: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl ColumnBuilder {
    fn new(numeric: bool) -> Self {
        ColumnBuilder {
            numeric,
            values: Vec::new(),
            codes: Vec::new(),
            levels: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    fn push_missing(&mut self) {
        if self.numeric {
            self.values.push(f64::NAN);
        } else {
            self.codes.push(MISSING_CODE);
        }
    }

    fn push_level(&mut self, level: &str) {
        let next = self.levels.len() as u32;
        let code = *self.lookup.entry(level.to_string()).or_insert_with(|| {
            self.levels.push(level.to_string());
            next
        });
        self.codes.push(code);
    }

    fn finish(self) -> ColumnData {
        if self.numeric {
            ColumnData::Numeric(self.values)
        } else {
            ColumnData::Categorical {
                codes: self.codes,
                levels: self.levels,
            }
        }
    }
}

impl Dataset {
    /// Builds a dataset from text records laid out in schema column order.
    pub fn from_records<R, S>(schema: Schema, records: impl IntoIterator<Item = R>) -> Result<Self>
    where
        R: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut builders: Vec<ColumnBuilder> = schema
            .columns()
            .iter()
            .map(|c| ColumnBuilder::new(c.kind.is_numeric()))
            .collect();
        for (index, record) in records.into_iter().enumerate() {
            let record = record.as_ref();
            if record.len() != schema.len() {
                return Err(AuditError::InvalidArgument(format!(
                    "record {index} has {} fields, schema has {}",
                    record.len(),
                    schema.len()
                )));
            }
            for (c, cell) in record.iter().enumerate() {
                push_cell(&schema, &mut builders[c], c, cell.as_ref(), index)?;
            }
        }
        let columns = builders.into_iter().map(ColumnBuilder::finish).collect();
        Self::from_columns(schema, columns)
    }

    /// Assembles a dataset from pre-parsed columns, validating shape.
    pub fn from_columns(schema: Schema, columns: Vec<ColumnData>) -> Result<Self> {
        if columns.len() != schema.len() {
            return Err(AuditError::SchemaMismatch(format!(
                "{} columns for a {}-column schema",
                columns.len(),
                schema.len()
            )));
        }
        let row_count = columns.first().map_or(0, ColumnData::len);
        for (spec, col) in schema.columns().iter().zip(&columns) {
            if col.len() != row_count {
                return Err(AuditError::InvalidArgument(format!(
                    "column `{}` has {} rows, expected {row_count}",
                    spec.name,
                    col.len()
                )));
            }
            match (spec.kind.is_numeric(), col) {
                (true, ColumnData::Numeric(v)) => {
                    if v.iter().any(|x| x.is_infinite()) {
                        return Err(AuditError::InvalidArgument(format!(
                            "column `{}` holds a non-finite value",
                            spec.name
                        )));
                    }
                }
                (false, ColumnData::Categorical { levels, .. }) => {
                    if let Some(bad) = levels.iter().find(|l| spec.is_missing_token(l)) {
                        return Err(AuditError::InvalidArgument(format!(
                            "column `{}` interns missing token `{bad}` as a level",
                            spec.name
                        )));
                    }
                }
                _ => {
                    return Err(AuditError::SchemaMismatch(format!(
                        "column `{}` storage does not match its kind",
                        spec.name
                    )))
                }
            }
        }
        let ds = Dataset {
            schema,
            columns,
            row_count,
        };
        ds.check_indicators()?;
        Ok(ds)
    }

    fn check_indicators(&self) -> Result<()> {
        for idx in self.schema.indicator_columns() {
            let col = &self.columns[idx];
            let ok = match col {
                ColumnData::Numeric(v) => v.iter().all(|x| x.is_nan() || *x == 0.0 || *x == 1.0),
                ColumnData::Categorical { levels, .. } => {
                    levels.iter().all(|l| l == "0" || l == "1")
                }
            };
            if !ok {
                return Err(AuditError::InvalidArgument(format!(
                    "event indicator `{}` must only hold 0/1",
                    self.schema.column(idx).name
                )));
            }
        }
        Ok(())
    }

    /// Reads a headed, comma-separated UTF-8 file. Header order need not
    /// match the schema; extra header columns are ignored.
    pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| AuditError::io(path, e))?;
        Self::read_csv(file, schema)
    }

    pub fn read_csv<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        let mut positions: HashMap<&str, usize> = HashMap::new();
        for (i, h) in header.iter().enumerate() {
            let h = h.trim();
            if positions.insert(h, i).is_some() {
                return Err(AuditError::DuplicateColumn(h.to_string()));
            }
        }
        let mut source = Vec::with_capacity(schema.len());
        for spec in schema.columns() {
            match positions.get(spec.name.as_str()) {
                Some(&p) => source.push(p),
                None => return Err(AuditError::MissingColumn(spec.name.clone())),
            }
        }
        let mut builders: Vec<ColumnBuilder> = schema
            .columns()
            .iter()
            .map(|c| ColumnBuilder::new(c.kind.is_numeric()))
            .collect();
        let mut row = 0usize;
        let mut record = csv::StringRecord::new();
        while rdr.read_record(&mut record)? {
            for (c, &p) in source.iter().enumerate() {
                let cell = record.get(p).unwrap_or("");
                push_cell(schema, &mut builders[c], c, cell, row)?;
            }
            row += 1;
        }
        let columns = builders.into_iter().map(ColumnBuilder::finish).collect();
        Self::from_columns(schema.clone(), columns)
    }

    /// Writes the dataset back out as CSV with a header row. Missing cells
    /// are written empty.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| AuditError::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        w.write_record(self.schema.columns().iter().map(|c| c.name.as_str()))?;
        for r in 0..self.row_count {
            w.write_record(self.row_text(r).iter().map(|c| c.as_deref().unwrap_or("")))?;
        }
        w.flush().map_err(|e| AuditError::io(path, e))?;
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, idx: usize) -> &ColumnData {
        &self.columns[idx]
    }

    pub fn columns(&self) -> &[ColumnData] {
        &self.columns
    }

    pub fn column_by_name(&self, name: &str) -> Result<(usize, &ColumnData)> {
        let idx = self.schema.require(name)?;
        Ok((idx, &self.columns[idx]))
    }

    /// Raw numeric cells (NaN = missing) of a numeric or event-time column.
    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.column_by_name(name)? {
            (_, ColumnData::Numeric(v)) => Ok(v),
            _ => Err(AuditError::NotNumeric(name.to_string())),
        }
    }

    /// Non-missing values of a numeric column, in row order.
    pub fn non_missing(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self
            .numeric(name)?
            .iter()
            .copied()
            .filter(|v| !v.is_nan())
            .collect())
    }

    pub fn row_text(&self, row: usize) -> Vec<Option<String>> {
        self.columns.iter().map(|c| c.text(row)).collect()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
            row_count: rows.len(),
        }
    }

    /// Stacks `other` below `self`. Categorical dictionaries are merged by
    /// level text, keeping `self`'s codes and appending unseen levels.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.schema != *other.schema() {
            return Err(AuditError::SchemaMismatch(
                "cannot stack datasets with different schemas".into(),
            ));
        }
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| match (a, b) {
                (ColumnData::Numeric(x), ColumnData::Numeric(y)) => {
                    let mut v = x.clone();
                    v.extend_from_slice(y);
                    ColumnData::Numeric(v)
                }
                (
                    ColumnData::Categorical { codes, levels },
                    ColumnData::Categorical {
                        codes: other_codes,
                        levels: other_levels,
                    },
                ) => {
                    let base = levels;
                    let mut levels = base.clone();
                    let mut lookup: HashMap<&str, u32> = HashMap::new();
                    for (i, l) in base.iter().enumerate() {
                        lookup.insert(l.as_str(), i as u32);
                    }
                    let remap: Vec<u32> = other_levels
                        .iter()
                        .map(|l| match lookup.get(l.as_str()) {
                            Some(&c) => c,
                            None => {
                                levels.push(l.clone());
                                (levels.len() - 1) as u32
                            }
                        })
                        .collect();
                    let mut codes = codes.clone();
                    codes.extend(other_codes.iter().map(|&c| {
                        if c == MISSING_CODE {
                            MISSING_CODE
                        } else {
                            remap[c as usize]
                        }
                    }));
                    ColumnData::Categorical { codes, levels }
                }
                _ => unreachable!("schemas are equal"),
            })
            .collect();
        Ok(Dataset {
            schema: self.schema.clone(),
            columns,
            row_count: self.row_count + other.row_count,
        })
    }

    pub fn ensure_same_schema(&self, other: &Dataset) -> Result<()> {
        if self.schema != other.schema {
            let a: Vec<_> = self.schema.columns().iter().map(|c| &c.name).collect();
            let b: Vec<_> = other.schema.columns().iter().map(|c| &c.name).collect();
            return Err(AuditError::SchemaMismatch(format!("{a:?} vs {b:?}")));
        }
        Ok(())
    }

    pub fn kind(&self, idx: usize) -> ColumnKind {
        self.schema.column(idx).kind
    }
}

fn push_cell(
    schema: &Schema,
    builder: &mut ColumnBuilder,
    col: usize,
    raw: &str,
    row: usize,
) -> Result<()> {
    let spec = schema.column(col);
    let cell = raw.trim();
    if spec.is_missing_token(cell) || spec.is_missing_token(raw) {
        builder.push_missing();
        return Ok(());
    }
    if builder.numeric {
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => builder.values.push(v),
            _ => {
                return Err(AuditError::ParseError {
                    row,
                    column: spec.name.clone(),
                    text: raw.to_string(),
                })
            }
        }
    } else {
        builder.push_level(cell);
    }
    Ok(())
}
