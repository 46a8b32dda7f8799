use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Categorical,
    Numeric,
    /// Time-to-event value; paired with a 0/1 event indicator column.
    EventTime,
}

impl ColumnKind {
    /// Numeric and event-time columns both hold real values.
    pub fn is_numeric(self) -> bool {
        !matches!(self, ColumnKind::Categorical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default)]
    pub missing_tokens: BTreeSet<String>,
    #[serde(default)]
    pub quasi_identifier: bool,
    #[serde(default)]
    pub sensitive: bool,
    #[serde(default)]
    pub target: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_indicator_column: Option<String>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnSpec {
            name: name.into(),
            kind,
            missing_tokens: BTreeSet::new(),
            quasi_identifier: false,
            sensitive: false,
            target: false,
            event_indicator_column: None,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Self::new(name, ColumnKind::Categorical)
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        Self::new(name, ColumnKind::Numeric)
    }

    pub fn event_time(name: impl Into<String>, indicator: impl Into<String>) -> Self {
        let mut spec = Self::new(name, ColumnKind::EventTime);
        spec.event_indicator_column = Some(indicator.into());
        spec
    }

    pub fn quasi(mut self) -> Self {
        self.quasi_identifier = true;
        self
    }

    pub fn sensitive(mut self) -> Self {
        self.sensitive = true;
        self
    }

    pub fn with_missing_token(mut self, token: impl Into<String>) -> Self {
        self.missing_tokens.insert(token.into());
        self
    }

    /// Empty cells are always missing; declared tokens are too.
    pub fn is_missing_token(&self, cell: &str) -> bool {
        cell.is_empty() || self.missing_tokens.contains(cell)
    }
}

/// Ordered column declarations plus optional per-column distance weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    #[serde(rename = "column")]
    columns: Vec<ColumnEntry>,
}

#[derive(Deserialize)]
struct ColumnEntry {
    #[serde(flatten)]
    spec: ColumnSpec,
    weight: Option<f64>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        Self::with_weights(columns, None)
    }

    pub fn with_weights(columns: Vec<ColumnSpec>, weights: Option<Vec<f64>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(AuditError::DuplicateColumn(c.name.clone()));
            }
        }
        for c in &columns {
            match (&c.kind, &c.event_indicator_column) {
                (ColumnKind::EventTime, None) => {
                    return Err(AuditError::InvalidSchema(format!(
                        "event_time column `{}` needs an event_indicator_column",
                        c.name
                    )))
                }
                (ColumnKind::EventTime, Some(ind)) => {
                    if ind == &c.name || !seen.contains(ind.as_str()) {
                        return Err(AuditError::InvalidSchema(format!(
                            "event indicator `{ind}` of `{}` is not a schema column",
                            c.name
                        )));
                    }
                }
                (_, Some(_)) => {
                    return Err(AuditError::InvalidSchema(format!(
                        "only event_time columns may name an indicator (`{}`)",
                        c.name
                    )))
                }
                _ => {}
            }
        }
        if let Some(w) = &weights {
            if w.len() != columns.len() {
                return Err(AuditError::InvalidSchema(format!(
                    "{} weights for {} columns",
                    w.len(),
                    columns.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(AuditError::InvalidSchema(
                    "weights must be finite and non-negative".into(),
                ));
            }
            if !w.iter().any(|x| *x > 0.0) {
                return Err(AuditError::InvalidSchema(
                    "at least one weight must be positive".into(),
                ));
            }
        }
        if columns.is_empty() {
            return Err(AuditError::InvalidSchema("schema has no columns".into()));
        }
        Ok(Schema { columns, weights })
    }

    /// Parses the TOML schema format: one `[[column]]` table per column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SchemaFile =
            toml::from_str(text).map_err(|e| AuditError::InvalidSchema(e.to_string()))?;
        let any_weight = file.columns.iter().any(|c| c.weight.is_some());
        let weights = any_weight.then(|| {
            file.columns
                .iter()
                .map(|c| c.weight.unwrap_or(1.0))
                .collect()
        });
        Self::with_weights(file.columns.into_iter().map(|c| c.spec).collect(), weights)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, idx: usize) -> &ColumnSpec {
        &self.columns[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| AuditError::UnknownColumn(name.to_string()))
    }

    /// Weight vector, all ones when the schema declares none.
    pub fn weights(&self) -> Vec<f64> {
        self.weights
            .clone()
            .unwrap_or_else(|| vec![1.0; self.columns.len()])
    }

    pub fn quasi_identifiers(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.quasi_identifier)
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn sensitive_columns(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.sensitive)
            .map(|c| c.name.clone())
            .collect()
    }

    /// Names of the event-indicator columns referenced by event-time columns.
    pub(crate) fn indicator_columns(&self) -> Vec<usize> {
        self.columns
            .iter()
            .filter_map(|c| c.event_indicator_column.as_deref())
            .filter_map(|n| self.index_of(n))
            .collect()
    }
}
