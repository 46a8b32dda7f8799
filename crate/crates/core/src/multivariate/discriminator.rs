use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{AuditError, Result};
use crate::models::{roc_auc, train_with, tune, Encoder, ModelFamily};
use crate::seed::derive;

/// Sample mean and SD (n−1 denominator; 0 for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> MeanSd {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanSd { mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorRun {
    pub auc: f64,
    pub pmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorResult {
    pub family: ModelFamily,
    pub folds: usize,
    pub repeats: usize,
    /// Share of synthetic rows in the pooled data.
    pub synthetic_fraction: f64,
    pub disc_auc: MeanSd,
    pub pmse: MeanSd,
    pub runs: Vec<DiscriminatorRun>,
}

/// Mean squared deviation of propensities from the constant `c`.
pub fn pmse(propensities: &[f64], c: f64) -> f64 {
    propensities.iter().map(|p| (p - c).powi(2)).sum::<f64>() / propensities.len() as f64
}

/// Stratified fold id for every row.
pub(crate) fn fold_assignment(labels: &[bool], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; labels.len()];
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            out[i] = k % folds;
        }
    }
    out
}

/// Out-of-fold propensities of a real-vs-synthetic classifier. Model
/// hyperparameters are tuned once on the first fold's training rows.
pub fn out_of_fold_propensities(
    pooled: &Dataset,
    labels: &[bool],
    family: ModelFamily,
    folds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let columns: Vec<String> = pooled
        .schema()
        .columns()
        .iter()
        .map(|c| c.name.clone())
        .collect();
    let fold = fold_assignment(labels, folds, derive(seed, 0));
    let mut props = vec![0.0; labels.len()];
    let mut hp = None;
    for f in 0..folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| fold[i] != f).collect();
        let test: Vec<usize> = (0..labels.len()).filter(|&i| fold[i] == f).collect();
        let enc = Encoder::fit(pooled, &columns, &train)?;
        let x = enc.transform(pooled)?;
        let xtr = x.select_rows(&train);
        let ytr: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let params = match hp {
            Some(h) => h,
            None => *hp.insert(tune(&xtr, &ytr, family, derive(seed, 1))?),
        };
        let model = train_with(&xtr, &ytr, params, seed)?;
        let p = model.predict_proba(&x.select_rows(&test))?;
        for (i, v) in test.into_iter().zip(p) {
            props[i] = v;
        }
    }
    Ok(props)
}

/// Cross-validated discriminator AUC and pMSE, repeated over derived seeds.
pub fn discriminator_metrics(
    real: &Dataset,
    synthetic: &Dataset,
    family: ModelFamily,
    folds: usize,
    repeats: usize,
    seed: u64,
) -> Result<DiscriminatorResult> {
    real.ensure_same_schema(synthetic)?;
    if real.row_count() == 0 {
        return Err(AuditError::EmptyInput("real dataset".into()));
    }
    if synthetic.row_count() == 0 {
        return Err(AuditError::EmptySynthetic);
    }
    if folds < 2 || folds > real.row_count().min(synthetic.row_count()) {
        return Err(AuditError::InvalidArgument(format!(
            "cannot use {folds} folds"
        )));
    }
    if repeats == 0 {
        return Err(AuditError::InvalidArgument("repeats must be ≥ 1".into()));
    }
    let pooled = real.concat(synthetic)?;
    let labels: Vec<bool> = (0..pooled.row_count())
        .map(|i| i >= real.row_count())
        .collect();
    let c = synthetic.row_count() as f64 / pooled.row_count() as f64;
    let runs: Vec<DiscriminatorRun> = (0..repeats as u64)
        .into_par_iter()
        .map(|r| {
            let p = out_of_fold_propensities(&pooled, &labels, family, folds, derive(seed, r))?;
            Ok(DiscriminatorRun {
                auc: roc_auc(&p, &labels)?,
                pmse: pmse(&p, c),
            })
        })
        .collect::<Result<_>>()?;
    let aucs: Vec<f64> = runs.iter().map(|r| r.auc).collect();
    let pm: Vec<f64> = runs.iter().map(|r| r.pmse).collect();
    Ok(DiscriminatorResult {
        family,
        folds,
        repeats,
        synthetic_fraction: c,
        disc_auc: MeanSd::of(&aucs),
        pmse: MeanSd::of(&pm),
        runs,
    })
}
