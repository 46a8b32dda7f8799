//! Shared inputs for the benchmarks.

use synthaudit_core::data::Dataset;
use synthaudit_core::sim::SimSpec;

/// A wide mixed-type table of `n` rows.
pub fn table(n: usize, seed: u64) -> Dataset {
    SimSpec {
        numeric: 15,
        categorical: 15,
        levels: 6,
        missing_rate: 0.02,
        target: false,
    }
    .sample(n, seed)
    .expect("simulated table")
}

/// Non-missing values of the first numeric column.
pub fn numeric_values(ds: &Dataset) -> Vec<f64> {
    ds.non_missing("n0").expect("n0 is numeric")
}
