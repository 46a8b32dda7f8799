use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the audit engine.
#[derive(Debug, Error)]
pub enum AuditError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("column `{0}` declared in schema is absent from the header")]
    MissingColumn(String),
    #[error("column `{0}` appears more than once")]
    DuplicateColumn(String),
    #[error("cannot parse `{text}` as a number (row {row}, column `{column}`)")]
    ParseError {
        row: usize,
        column: String,
        text: String,
    },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is not numeric")]
    NotNumeric(String),
    #[error("column `{0}` is not categorical")]
    NotCategorical(String),
    #[error("no non-missing values available{0}")]
    AllMissing(String),
    #[error("requested {requested} classes but only {distinct} distinct values exist")]
    TooFewDistinct { requested: usize, distinct: usize },
    #[error("schemas of the compared datasets differ: {0}")]
    SchemaMismatch(String),
    #[error("records were binned with different edges")]
    BinningMismatch,
    #[error("target dataset is empty")]
    EmptyTarget,
    #[error("at least {needed} columns required, got {got}")]
    TooFewColumns { needed: usize, got: usize },
    #[error("matrix shapes differ: {0} vs {1}")]
    ShapeMismatch(usize, usize),
    #[error("labels contain a single class")]
    SingleClass,
    #[error("target column `{0}` is listed among predictors")]
    TargetInPredictors(String),
    #[error("feature sets differ: {0}")]
    FeatureMismatch(String),
    #[error("negative survival time {0}")]
    NegativeTime(f64),
    #[error("group has no events")]
    NoEvents,
    #[error("empty split: {0}")]
    EmptySplit(String),
    #[error("synthetic dataset is empty")]
    EmptySynthetic,
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("no trials supplied")]
    NoTrials,
    #[error("target `{0}` is also a quasi-identifier")]
    TargetIsQuasi(String),
    #[error("quasi-identifier list is empty")]
    EmptyQuasi,
    #[error("rank {rank} outside canary space of size {size}")]
    RankOutOfRange { rank: u64, size: u64 },
    #[error("generator adapter cannot score records")]
    AdapterNoScore,
    #[error("generator adapter failed: {0}")]
    Adapter(String),
    #[error(transparent)]
    Rule(#[from] crate::multivariate::rules::RuleError),
    /// `column` is 1-based within the line.
    #[error("rule on line {line}, column {column}: {}", error.detail())]
    RuleFile {
        line: usize,
        column: usize,
        error: crate::multivariate::rules::RuleError,
    },
    #[error("rule on line {line}: {message}")]
    RuleLine { line: usize, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl AuditError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AuditError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = AuditError> = std::result::Result<T, E>;
