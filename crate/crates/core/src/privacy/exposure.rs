//! Canary exposure: insert rare, synthetic "canary" records into the training
//! data and measure how much more likely the generator finds them than the
//! other members of the canary space.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{AuditError, Result};

/// Largest canary space that is enumerated.
pub const MAX_CANARY_SPACE: u64 = 1 << 20;

/// `log2(size) − log2(rank)` for a 1-based rank within the canary space.
pub fn exposure(rank: u64, size: u64) -> Result<f64> {
    if rank == 0 || size == 0 || rank > size {
        return Err(AuditError::RankOutOfRange { rank, size });
    }
    Ok((size as f64).log2() - (rank as f64).log2())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanarySlot {
    pub column: String,
    pub values: Vec<String>,
}

/// A template record plus slots, each slot ranging over a value list. The
/// space is every combination of slot values, in mixed-radix order with the
/// last slot varying fastest.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CanarySpace {
    /// Fixed values of non-slot columns; unspecified columns are missing.
    pub template: BTreeMap<String, String>,
    pub slots: Vec<CanarySlot>,
}

impl CanarySpace {
    pub fn size(&self) -> u64 {
        self.slots
            .iter()
            .map(|s| s.values.len() as u64)
            .try_fold(1u64, u64::checked_mul)
            .unwrap_or(u64::MAX)
    }

    pub fn validate(&self, real: &Dataset) -> Result<()> {
        let schema = real.schema();
        if self.slots.is_empty() {
            return Err(AuditError::ConfigInvalid(
                "canary space has no slots".into(),
            ));
        }
        for name in self.template.keys() {
            schema.require(name)?;
        }
        let mut seen = Vec::new();
        for s in &self.slots {
            schema.require(&s.column)?;
            if s.values.is_empty() {
                return Err(AuditError::ConfigInvalid(format!(
                    "canary slot `{}` has no values",
                    s.column
                )));
            }
            if seen.contains(&&s.column) || self.template.contains_key(&s.column) {
                return Err(AuditError::ConfigInvalid(format!(
                    "canary column `{}` set twice",
                    s.column
                )));
            }
            seen.push(&s.column);
        }
        if self.size() > MAX_CANARY_SPACE {
            return Err(AuditError::ConfigInvalid(format!(
                "canary space of {} records exceeds {MAX_CANARY_SPACE}",
                self.size()
            )));
        }
        Ok(())
    }

    /// Cells of the canary with canonical index `index`, in schema order.
    pub fn record(&self, real: &Dataset, index: u64) -> Vec<String> {
        let schema = real.schema();
        let mut row: Vec<String> = schema
            .columns()
            .iter()
            .map(|c| self.template.get(&c.name).cloned().unwrap_or_default())
            .collect();
        let mut rest = index;
        for s in self.slots.iter().rev() {
            let radix = s.values.len() as u64;
            let col = schema.index_of(&s.column).expect("validated");
            row[col] = s.values[(rest % radix) as usize].clone();
            rest /= radix;
        }
        row
    }

    pub fn dataset(
        &self,
        real: &Dataset,
        indices: impl IntoIterator<Item = u64>,
    ) -> Result<Dataset> {
        let rows: Vec<Vec<String>> = indices.into_iter().map(|i| self.record(real, i)).collect();
        Dataset::from_records(real.schema().clone(), rows)
    }
}

/// External generator boundary.
pub trait GeneratorAdapter {
    /// Trains on the CSV at `input` and writes a synthetic CSV to `output`.
    fn train(&self, input: &Path, output: &Path, seed: u64) -> Result<()>;
    /// One log-perplexity per record of the CSV at `input`; lower means more
    /// likely. Engines that cannot score return [`AuditError::AdapterNoScore`].
    fn score(&self, input: &Path) -> Result<Vec<f64>>;
}

/// Runs a generator as a subprocess:
/// `<program> <args..> train --in <csv> --out <csv> --seed <n>` and
/// `<program> <args..> score --in <csv>`, the latter printing one number per
/// input record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubprocessAdapter {
    pub program: PathBuf,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default = "yes")]
    pub can_score: bool,
}

fn yes() -> bool {
    true
}

impl SubprocessAdapter {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        SubprocessAdapter {
            program: program.into(),
            args: Vec::new(),
            can_score: true,
        }
    }

    fn run(&self, extra: &[&std::ffi::OsStr]) -> Result<String> {
        let out = Command::new(&self.program)
            .args(&self.args)
            .args(extra)
            .output()
            .map_err(|e| {
                AuditError::Adapter(format!("cannot start {}: {e}", self.program.display()))
            })?;
        if !out.status.success() {
            return Err(AuditError::Adapter(format!(
                "{} exited with {}: {}",
                self.program.display(),
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        String::from_utf8(out.stdout).map_err(|e| AuditError::Adapter(e.to_string()))
    }
}

impl GeneratorAdapter for SubprocessAdapter {
    fn train(&self, input: &Path, output: &Path, seed: u64) -> Result<()> {
        let seed = seed.to_string();
        self.run(&[
            "train".as_ref(),
            "--in".as_ref(),
            input.as_os_str(),
            "--out".as_ref(),
            output.as_os_str(),
            "--seed".as_ref(),
            seed.as_ref(),
        ])?;
        Ok(())
    }

    fn score(&self, input: &Path) -> Result<Vec<f64>> {
        if !self.can_score {
            return Err(AuditError::AdapterNoScore);
        }
        self.run(&["score".as_ref(), "--in".as_ref(), input.as_os_str()])?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| AuditError::Adapter(format!("bad score line `{l}`")))
            })
            .collect()
    }
}

/// 1-based rank of each inserted canary among itself and every canary that
/// was not inserted, ascending by score. Equal scores are ordered by
/// canonical index.
pub fn canary_ranks(scores: &[f64], inserted: &[u64]) -> Result<Vec<u64>> {
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(AuditError::Adapter(format!("score of canary {i} is NaN")));
    }
    let mut is_inserted = vec![false; scores.len()];
    for &i in inserted {
        is_inserted[i as usize] = true;
    }
    Ok(inserted
        .iter()
        .map(|&i| {
            let (si, i) = (scores[i as usize], i as usize);
            1 + (0..scores.len())
                .filter(|&c| !is_inserted[c] && (scores[c] < si || (scores[c] == si && c < i)))
                .count() as u64
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanaryCampaign {
    pub space_size: u64,
    /// `log2` of the space size: the exposure of a fully memorized canary.
    pub threshold: f64,
    pub inserted: Vec<u64>,
    pub ranks: Vec<u64>,
    pub exposures: Vec<f64>,
    pub mean_exposure: f64,
    pub median_exposure: f64,
    pub low_risk: bool,
}

/// Inserts `n_canaries` seeded canaries into a copy of `real`, trains the
/// generator on it and ranks each inserted canary by the generator's scores.
/// Intermediate files go to `workdir`.
pub fn canary_campaign(
    real: &Dataset,
    adapter: &dyn GeneratorAdapter,
    n_canaries: usize,
    space: &CanarySpace,
    seed: u64,
    workdir: &Path,
) -> Result<CanaryCampaign> {
    space.validate(real)?;
    let size = space.size();
    if n_canaries == 0 {
        return Err(AuditError::InvalidArgument(
            "at least one canary is required".into(),
        ));
    }
    if n_canaries as u64 >= size {
        return Err(AuditError::InvalidArgument(format!(
            "{n_canaries} canaries leave no competitors in a space of {size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inserted: Vec<u64> = rand::seq::index::sample(&mut rng, size as usize, n_canaries)
        .into_iter()
        .map(|i| i as u64)
        .collect();
    inserted.sort_unstable();

    let train_path = workdir.join("train_with_canaries.csv");
    let synth_path = workdir.join("synthetic.csv");
    let cand_path = workdir.join("canary_candidates.csv");
    real.concat(&space.dataset(real, inserted.iter().copied())?)?
        .write_csv(&train_path)?;
    adapter.train(&train_path, &synth_path, seed)?;
    space.dataset(real, 0..size)?.write_csv(&cand_path)?;
    let scores = adapter.score(&cand_path)?;
    if scores.len() as u64 != size {
        return Err(AuditError::Adapter(format!(
            "adapter returned {} scores for {size} canaries",
            scores.len()
        )));
    }
    let ranks = canary_ranks(&scores, &inserted)?;
    let exposures = ranks
        .iter()
        .map(|&r| exposure(r, size))
        .collect::<Result<Vec<_>>>()?;
    let mean_exposure = exposures.iter().sum::<f64>() / exposures.len() as f64;
    let mut sorted = exposures.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() / 2;
    let median_exposure = if sorted.len() % 2 == 1 {
        sorted[m]
    } else {
        (sorted[m - 1] + sorted[m]) / 2.0
    };
    let threshold = (size as f64).log2();
    Ok(CanaryCampaign {
        space_size: size,
        threshold,
        inserted,
        ranks,
        exposures,
        mean_exposure,
        median_exposure,
        low_risk: mean_exposure < threshold,
    })
}
