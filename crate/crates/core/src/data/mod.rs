//! Schema, dataset ingestion, summary statistics and numeric discretization.

pub mod binning;
pub mod dataset;
pub mod schema;
pub mod stats;
pub mod view;

pub use binning::{
    bin_index, jenks_breaks, percentile_bin, percentile_edges, select_jenks, select_jenks_k,
    JenksBreaks, DEFAULT_PERCENTILE_BINS,
};
pub use dataset::{ColumnData, Dataset, MISSING_CODE};
pub use schema::{ColumnKind, ColumnSpec, Schema};
pub use stats::{population_stats, ColumnSummary, LevelShare, NumericSummary};
pub use view::{BinnedView, Codes, MixedView, RecordCoder, MISSING_BIN};
