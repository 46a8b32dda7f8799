//! Seeded product-of-marginals table generator with an optional logistic
//! target. Columns are mutually independent, so two draws with different
//! seeds are independent samples of the same distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::data::{ColumnSpec, Dataset, Schema};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub numeric: usize,
    pub categorical: usize,
    /// Levels of every categorical column.
    pub levels: usize,
    /// Probability that any predictor cell is missing.
    pub missing_rate: f64,
    /// Adds a binary column `y` driven by the first numeric columns.
    pub target: bool,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            numeric: 4,
            categorical: 4,
            levels: 4,
            missing_rate: 0.0,
            target: false,
        }
    }
}

impl SimSpec {
    pub fn schema(&self) -> Schema {
        let mut cols: Vec<ColumnSpec> = (0..self.numeric)
            .map(|i| ColumnSpec::numeric(format!("n{i}")))
            .collect();
        cols.extend((0..self.categorical).map(|i| ColumnSpec::categorical(format!("c{i}"))));
        if self.target {
            cols.push(ColumnSpec::categorical("y"));
        }
        Schema::new(cols).expect("generated names are unique")
    }

    pub fn predictors(&self) -> Vec<String> {
        let s = self.schema();
        s.columns()
            .iter()
            .map(|c| c.name.clone())
            .filter(|n| n != "y")
            .collect()
    }

    /// Draws `n` records.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std = Normal::new(0.0, 1.0).expect("valid");
        let logn = LogNormal::new(0.0, 0.5).expect("valid");
        // Zipf-like level probabilities.
        let w: Vec<f64> = (0..self.levels).map(|j| 1.0 / (j + 1) as f64).collect();
        let total: f64 = w.iter().sum();
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row: Vec<String> = Vec::with_capacity(self.numeric + self.categorical + 1);
            let mut z = -0.2;
            for i in 0..self.numeric {
                let x = match i % 3 {
                    0 => 10.0 * (i + 1) as f64 + 3.0 * std.sample(&mut rng),
                    1 => logn.sample(&mut rng),
                    _ => rng.random_range(-5.0..5.0),
                };
                if i < 3 {
                    let scale = [3.0, 0.5, 5.0][i];
                    let mean = [10.0, 1.13, 0.0][i];
                    z += [1.2, -0.9, 0.6][i] * (x - mean) / scale;
                }
                let missing = self.missing_rate > 0.0 && rng.random::<f64>() < self.missing_rate;
                row.push(if missing {
                    String::new()
                } else {
                    format!("{x:.6}")
                });
            }
            for _ in 0..self.categorical {
                let mut u = rng.random::<f64>() * total;
                let mut level = self.levels - 1;
                for (j, wj) in w.iter().enumerate() {
                    if u < *wj {
                        level = j;
                        break;
                    }
                    u -= wj;
                }
                let missing = self.missing_rate > 0.0 && rng.random::<f64>() < self.missing_rate;
                row.push(if missing {
                    String::new()
                } else {
                    format!("L{level}")
                });
            }
            if self.target {
                let p = 1.0 / (1.0 + (-z).exp());
                row.push(if rng.random::<f64>() < p { "yes" } else { "no" }.to_string());
            }
            rows.push(row);
        }
        Dataset::from_records(self.schema(), rows)
    }
}
