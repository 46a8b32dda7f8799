use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{AuditError, Result};
use crate::models::{
    binary_labels, feature_importance, ndcg, roc_curve, stratified_split, ModelFamily, RocCurve,
    TabularClassifier,
};
use crate::multivariate::discriminator::MeanSd;
use crate::seed::derive;

/// Share of labelled real rows held out for validation.
pub const TSTR_HOLDOUT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TstrRun {
    pub auc_real: f64,
    pub auc_syn: f64,
    pub ratio: f64,
    pub ndcg: f64,
    pub real_importance: Vec<(String, f64)>,
    pub syn_importance: Vec<(String, f64)>,
    pub real_curve: RocCurve,
    pub syn_curve: RocCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TstrResult {
    pub target: String,
    pub family: ModelFamily,
    pub auc_real: MeanSd,
    pub auc_syn: MeanSd,
    pub ratio: MeanSd,
    pub ndcg: MeanSd,
    pub runs: Vec<TstrRun>,
}

/// Seed used by repeat `r` of a comparison seeded with `seed`.
pub fn tstr_repeat_seed(seed: u64, r: usize) -> u64 {
    derive(seed, r as u64)
}

/// Train and validation row indices of `real` for one repeat seed. Rows
/// with a missing target are excluded from both.
pub fn tstr_split(
    real: &Dataset,
    target: &str,
    repeat_seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let labels = binary_labels(real, target, None)?;
    let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_some()).collect();
    let y: Vec<bool> = rows.iter().map(|&i| labels[i].unwrap()).collect();
    let (tr, va) = stratified_split(&y, TSTR_HOLDOUT, repeat_seed);
    if va.is_empty() || tr.is_empty() {
        return Err(AuditError::EmptySplit("too few labelled real rows".into()));
    }
    Ok((
        tr.into_iter().map(|k| rows[k]).collect(),
        va.into_iter().map(|k| rows[k]).collect(),
    ))
}

fn one_run(
    real: &Dataset,
    synthetic: &Dataset,
    target: &str,
    predictors: &[String],
    family: ModelFamily,
    seed: u64,
) -> Result<TstrRun> {
    let (tr, va) = tstr_split(real, target, seed)?;
    let valid = real.select_rows(&va);
    let yva: Vec<bool> = binary_labels(&valid, target, None)?
        .into_iter()
        .map(Option::unwrap)
        .collect();
    let model_real =
        TabularClassifier::fit(&real.select_rows(&tr), target, predictors, family, seed)?;
    let model_syn = TabularClassifier::fit(synthetic, target, predictors, family, seed)?;
    let real_curve = roc_curve(&model_real.predict_proba(&valid)?, &yva)?;
    let syn_curve = roc_curve(&model_syn.predict_proba(&valid)?, &yva)?;
    let real_importance = feature_importance(&model_real.model);
    let syn_importance = feature_importance(&model_syn.model);
    let candidate: Vec<String> = syn_importance.iter().map(|f| f.0.clone()).collect();
    Ok(TstrRun {
        auc_real: real_curve.auc,
        auc_syn: syn_curve.auc,
        ratio: syn_curve.auc / real_curve.auc,
        ndcg: ndcg(&real_importance, &candidate)?,
        real_importance,
        syn_importance,
        real_curve,
        syn_curve,
    })
}

/// Train-on-synthetic, test-on-real comparison against a model trained on
/// real data, both evaluated on the same held-out real slice.
pub fn tstr_compare(
    real: &Dataset,
    synthetic: &Dataset,
    target: &str,
    predictors: &[String],
    family: ModelFamily,
    seed: u64,
    repeats: usize,
) -> Result<TstrResult> {
    real.ensure_same_schema(synthetic)?;
    if predictors.iter().any(|p| p == target) {
        return Err(AuditError::TargetInPredictors(target.to_string()));
    }
    if repeats == 0 {
        return Err(AuditError::InvalidArgument("repeats must be ≥ 1".into()));
    }
    let runs: Vec<TstrRun> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            one_run(
                real,
                synthetic,
                target,
                predictors,
                family,
                tstr_repeat_seed(seed, r),
            )
        })
        .collect::<Result<_>>()?;
    let col = |f: fn(&TstrRun) -> f64| MeanSd::of(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(TstrResult {
        target: target.to_string(),
        family,
        auc_real: col(|r| r.auc_real),
        auc_syn: col(|r| r.auc_syn),
        ratio: col(|r| r.ratio),
        ndcg: col(|r| r.ndcg),
        runs,
    })
}
