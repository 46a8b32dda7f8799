//! Attribute inference: how often an attacker holding a real record's
//! quasi-identifiers can read its sensitive value off the synthetic data.
//!
//! Numerics are binned with Jenks natural breaks fitted on the real data, so
//! matching and inference happen on bin codes. Code 0 stands for a missing
//! cell and is an ordinary value for matching purposes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::{bin_index, ColumnData, Dataset, RecordCoder, MISSING_BIN};
use crate::error::{AuditError, Result};
use crate::models::{encode, train, ModelFamily, StumpRegressor};

/// Share of records matched in error when matching on quasi-identifiers.
pub const MATCH_ERROR_RATE: f64 = 0.23;
/// Share of data-entry errors in the quasi-identifiers.
pub const DATA_ERROR_RATE: f64 = 0.0426;
pub const DEFAULT_MISSING_WEIGHT: f64 = 0.5;
pub const DEFAULT_GVF_THRESHOLD: f64 = 0.8;
pub const DEFAULT_JENKS_K_MAX: usize = 10;
/// Risk at or below this value is considered very low.
pub const ATTRIBUTE_RISK_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaVariant {
    ReferencePaper,
    Conservative,
    NoErrors,
}

impl LambdaVariant {
    pub const ALL: [LambdaVariant; 3] = [
        LambdaVariant::ReferencePaper,
        LambdaVariant::Conservative,
        LambdaVariant::NoErrors,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LambdaVariant::ReferencePaper => "reference_paper",
            LambdaVariant::Conservative => "conservative",
            LambdaVariant::NoErrors => "no_errors",
        }
    }

    /// Matching-error adjustment for `k` quasi-identifiers.
    pub fn lambda_prime(self, k: usize) -> f64 {
        match self {
            LambdaVariant::ReferencePaper => {
                (1.0 + (MATCH_ERROR_RATE * (1.0 - DATA_ERROR_RATE)).powi(k as i32)) / 2.0
            }
            LambdaVariant::Conservative => 0.8,
            LambdaVariant::NoErrors => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceMode {
    /// Mode (categorical) or median (numeric) of the matching synthetic rows.
    #[default]
    ModeMedian,
    /// Models trained on the synthetic data, quasi-identifiers to target.
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MatchMode {
    #[default]
    Exact,
    /// Numeric quasi-identifiers match within `tolerance` bins.
    Approximate { tolerance: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeOptions {
    pub mode: InferenceMode,
    pub matching: MatchMode,
    /// Weight of a correct inference when the real target cell is missing.
    pub missing_weight: f64,
    pub gvf_threshold: f64,
    pub k_max: usize,
    pub seed: u64,
}

impl Default for AttributeOptions {
    fn default() -> Self {
        AttributeOptions {
            mode: InferenceMode::ModeMedian,
            matching: MatchMode::Exact,
            missing_weight: DEFAULT_MISSING_WEIGHT,
            gvf_threshold: DEFAULT_GVF_THRESHOLD,
            k_max: DEFAULT_JENKS_K_MAX,
            seed: 0,
        }
    }
}

/// Per-record terms of the risk sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordComponent {
    /// Size of the record's quasi-identifier class in the real data.
    pub f_s: usize,
    pub matched: bool,
    /// 1 for a correct inference, `missing_weight` for a correctly inferred
    /// missing cell, 0 otherwise.
    pub correct: f64,
}

impl RecordComponent {
    /// Contribution with λ′ = 1.
    pub fn weight(&self) -> f64 {
        if self.matched {
            self.correct / self.f_s as f64
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantRisk {
    pub variant: LambdaVariant,
    pub lambda_prime: f64,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeRisk {
    pub target: String,
    pub quasi: Vec<String>,
    pub records: usize,
    pub matched_records: usize,
    pub correct_records: usize,
    pub variants: Vec<VariantRisk>,
    #[serde(skip)]
    pub components: Vec<RecordComponent>,
}

impl AttributeRisk {
    pub fn risk(&self, variant: LambdaVariant) -> f64 {
        self.variants
            .iter()
            .find(|v| v.variant == variant)
            .map_or(0.0, |v| v.risk)
    }
}

fn variants(k: usize, mean_weight: f64) -> Vec<VariantRisk> {
    LambdaVariant::ALL
        .iter()
        .map(|&variant| {
            let lambda_prime = variant.lambda_prime(k);
            VariantRisk {
                variant,
                lambda_prime,
                risk: lambda_prime * mean_weight,
            }
        })
        .collect()
}

/// Risk from already-computed per-record components.
pub fn risk_from_components(components: &[RecordComponent], k: usize) -> Vec<VariantRisk> {
    let n = components.len().max(1) as f64;
    variants(
        k,
        components.iter().map(RecordComponent::weight).sum::<f64>() / n,
    )
}

fn validate(
    real: &Dataset,
    synthetic: &Dataset,
    quasi: &[String],
    target: &str,
) -> Result<(Vec<usize>, usize)> {
    real.ensure_same_schema(synthetic)?;
    if quasi.is_empty() {
        return Err(AuditError::EmptyQuasi);
    }
    if quasi.iter().any(|q| q == target) {
        return Err(AuditError::TargetIsQuasi(target.to_string()));
    }
    if real.row_count() == 0 {
        return Err(AuditError::EmptyInput("real dataset".into()));
    }
    if synthetic.row_count() == 0 {
        return Err(AuditError::EmptySynthetic);
    }
    let schema = real.schema();
    let q = quasi
        .iter()
        .map(|c| schema.require(c))
        .collect::<Result<Vec<_>>>()?;
    Ok((q, schema.require(target)?))
}

/// Median of present values, binned; missing when nothing is present.
fn median_code(values: impl Iterator<Item = f64>, edges: &[f64]) -> u32 {
    let mut v: Vec<f64> = values.filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return MISSING_BIN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    let med = if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    };
    bin_index(edges, med) as u32 + 1
}

/// Most frequent code, lowest code on ties.
fn mode_code(codes: impl Iterator<Item = u32>) -> u32 {
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for c in codes {
        *counts.entry(c).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map_or(MISSING_BIN, |(c, _)| c)
}

/// Model-based inferred codes for every real record.
fn model_inference(
    real: &Dataset,
    synthetic: &Dataset,
    quasi: &[String],
    target: &str,
    syn_codes: &[u32],
    edges: Option<&[f64]>,
    seed: u64,
) -> Result<Vec<u32>> {
    if let Some(edges) = edges {
        let model = StumpRegressor::fit(synthetic, target, quasi, 100, 0.1)?;
        return Ok(model
            .predict(real)?
            .into_iter()
            .map(|p| bin_index(edges, p) as u32 + 1)
            .collect());
    }
    let mut levels: Vec<u32> = syn_codes.to_vec();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() == 1 {
        return Ok(vec![levels[0]; real.row_count()]);
    }
    let all: Vec<usize> = (0..synthetic.row_count()).collect();
    let (encoder, x) = encode(synthetic, quasi, &all)?;
    let xr = encoder.transform(real)?;
    let mut best = vec![(f64::NEG_INFINITY, MISSING_BIN); real.row_count()];
    for &level in &levels {
        let y: Vec<bool> = syn_codes.iter().map(|&c| c == level).collect();
        let p = train(&x, &y, ModelFamily::Logistic, seed)?.predict_proba(&xr)?;
        for (b, v) in best.iter_mut().zip(p) {
            if v > b.0 {
                *b = (v, level);
            }
        }
    }
    Ok(best.into_iter().map(|b| b.1).collect())
}

/// Attribute-inference risk of one target under all three λ′ variants.
pub fn attribute_inference(
    real: &Dataset,
    synthetic: &Dataset,
    quasi: &[String],
    target: &str,
    options: &AttributeOptions,
) -> Result<AttributeRisk> {
    let (qidx, tidx) = validate(real, synthetic, quasi, target)?;
    let k = qidx.len();
    let mut cols = qidx.clone();
    cols.push(tidx);
    let coder = RecordCoder::jenks(
        real,
        &[synthetic],
        cols,
        options.gvf_threshold,
        options.k_max,
    )?;
    let rb = coder.binned(real)?;
    let sb = coder.binned(synthetic)?;
    let numeric_slot: Vec<bool> = qidx.iter().map(|&c| real.kind(c).is_numeric()).collect();
    let target_edges: Option<Vec<f64>> = coder.bin_edges()[k].map(<[f64]>::to_vec);

    let key = |v: &crate::data::BinnedView, r: usize| -> Vec<u32> {
        (0..k).map(|c| v.code(r, c)).collect()
    };
    let mut class_size: HashMap<Vec<u32>, usize> = HashMap::new();
    for r in 0..rb.len() {
        *class_size.entry(key(&rb, r)).or_default() += 1;
    }
    let mut syn_groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    let mut syn_keys: Vec<Vec<u32>> = Vec::new();
    for r in 0..sb.len() {
        let kv = key(&sb, r);
        syn_groups
            .entry(kv.clone())
            .or_insert_with(|| {
                syn_keys.push(kv);
                Vec::new()
            })
            .push(r);
    }
    let compatible = |a: &[u32], b: &[u32], tol: u32| {
        a.iter().zip(b).zip(&numeric_slot).all(|((&x, &y), &num)| {
            if num && x != MISSING_BIN && y != MISSING_BIN {
                x.abs_diff(y) <= tol
            } else {
                x == y
            }
        })
    };
    let syn_target: Vec<u32> = (0..sb.len()).map(|r| sb.code(r, k)).collect();
    let syn_raw: Option<&[f64]> = match synthetic.column(tidx) {
        ColumnData::Numeric(v) => Some(v),
        ColumnData::Categorical { .. } => None,
    };
    let infer = |rows: &mut dyn Iterator<Item = usize>| -> u32 {
        match (syn_raw, &target_edges) {
            (Some(v), Some(e)) => median_code(rows.map(|r| v[r]), e),
            _ => mode_code(rows.map(|r| syn_target[r])),
        }
    };

    // Matching and mode/median inference depend only on the quasi key.
    let mut per_key: HashMap<Vec<u32>, (bool, u32)> = HashMap::new();
    for r in 0..rb.len() {
        let kv = key(&rb, r);
        if per_key.contains_key(&kv) {
            continue;
        }
        let entry = match options.matching {
            MatchMode::Exact => match syn_groups.get(&kv) {
                Some(rows) => (true, infer(&mut rows.iter().copied())),
                None => (false, MISSING_BIN),
            },
            MatchMode::Approximate { tolerance } => {
                let mut rows = syn_keys
                    .iter()
                    .filter(|sk| compatible(&kv, sk, tolerance))
                    .flat_map(|sk| syn_groups[sk].iter().copied())
                    .peekable();
                if rows.peek().is_some() {
                    (true, infer(&mut rows))
                } else {
                    (false, MISSING_BIN)
                }
            }
        };
        per_key.insert(kv, entry);
    }
    let model_codes = match options.mode {
        InferenceMode::ModeMedian => None,
        InferenceMode::Model => Some(model_inference(
            real,
            synthetic,
            quasi,
            target,
            &syn_target,
            target_edges.as_deref(),
            options.seed,
        )?),
    };

    let components: Vec<RecordComponent> = (0..rb.len())
        .map(|r| {
            let kv = key(&rb, r);
            let (matched, mut inferred) = per_key[&kv];
            if let Some(m) = &model_codes {
                inferred = m[r];
            }
            let truth = rb.code(r, k);
            let correct = match (truth == MISSING_BIN, inferred == truth) {
                (_, false) => 0.0,
                (true, true) => options.missing_weight,
                (false, true) => 1.0,
            };
            RecordComponent {
                f_s: class_size[&kv],
                matched,
                correct,
            }
        })
        .collect();
    Ok(AttributeRisk {
        target: target.to_string(),
        quasi: quasi.to_vec(),
        records: components.len(),
        matched_records: components.iter().filter(|c| c.matched).count(),
        correct_records: components
            .iter()
            .filter(|c| c.matched && c.correct > 0.0)
            .count(),
        variants: risk_from_components(&components, k),
        components,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeReport {
    pub targets: Vec<AttributeRisk>,
    /// Mean over records of the largest per-target contribution.
    pub total: Vec<VariantRisk>,
}

impl AttributeReport {
    pub fn total_risk(&self, variant: LambdaVariant) -> f64 {
        self.total
            .iter()
            .find(|v| v.variant == variant)
            .map_or(0.0, |v| v.risk)
    }
}

/// Runs [`attribute_inference`] for each target and combines them per
/// record by taking the maximum contribution.
pub fn attribute_report(
    real: &Dataset,
    synthetic: &Dataset,
    quasi: &[String],
    targets: &[String],
    options: &AttributeOptions,
) -> Result<AttributeReport> {
    if targets.is_empty() {
        return Err(AuditError::InvalidArgument(
            "no attribute-inference targets".into(),
        ));
    }
    let results = targets
        .iter()
        .map(|t| attribute_inference(real, synthetic, quasi, t, options))
        .collect::<Result<Vec<_>>>()?;
    let n = real.row_count();
    let mean_max = (0..n)
        .map(|r| {
            results
                .iter()
                .map(|a| a.components[r].weight())
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / n as f64;
    Ok(AttributeReport {
        total: variants(quasi.len(), mean_max),
        targets: results,
    })
}
