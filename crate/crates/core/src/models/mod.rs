//! Supervised learners used by the model-based fidelity checks: feature
//! encoding, L2 logistic regression, boosted stumps, ROC-AUC and nDCG.

mod encoder;
mod logistic;
mod metrics;
mod stumps;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnData, Dataset, MISSING_CODE};
use crate::error::{AuditError, Result};

pub use encoder::{encode, Encoder, FeatureMatrix};
pub use logistic::{fit_logistic, LogisticModel};
pub use metrics::{ndcg, roc_auc, roc_curve, RocCurve};
pub use stumps::{fit_stumps, Stump, StumpEnsemble, StumpLoss};

pub const LOGISTIC_LAMBDAS: [f64; 3] = [1e-4, 1e-2, 1.0];
pub const LOGISTIC_ITERATIONS: usize = 300;
pub const STUMP_ROUNDS: [usize; 3] = [50, 100, 200];
pub const STUMP_RATES: [f64; 2] = [0.1, 0.3];
const VALIDATION_SHARE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    #[default]
    Logistic,
    BoostedStumps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparams {
    Logistic { lambda: f64, iterations: usize },
    BoostedStumps { rounds: usize, learning_rate: f64 },
}

impl Hyperparams {
    pub fn family(&self) -> ModelFamily {
        match self {
            Hyperparams::Logistic { .. } => ModelFamily::Logistic,
            Hyperparams::BoostedStumps { .. } => ModelFamily::BoostedStumps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Logistic(LogisticModel),
    BoostedStumps(StumpEnsemble),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub family: ModelFamily,
    pub hyperparams: Hyperparams,
    pub params: ModelParams,
    pub training_seed: u64,
    pub feature_names: Vec<String>,
    pub feature_parents: Vec<String>,
}

impl TrainedClassifier {
    /// Positive-class probabilities.
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if x.names != self.feature_names {
            return Err(AuditError::FeatureMismatch(
                "design matrix columns differ from training".into(),
            ));
        }
        Ok(match &self.params {
            ModelParams::Logistic(m) => m.predict_proba(x),
            ModelParams::BoostedStumps(m) => m.predict(x),
        })
    }
}

fn check_labels(x: &FeatureMatrix, labels: &[bool]) -> Result<()> {
    if x.rows != labels.len() {
        return Err(AuditError::ShapeMismatch(x.rows, labels.len()));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(AuditError::SingleClass);
    }
    Ok(())
}

/// Trains with fixed hyperparameters.
pub fn train_with(
    x: &FeatureMatrix,
    labels: &[bool],
    hp: Hyperparams,
    seed: u64,
) -> Result<TrainedClassifier> {
    check_labels(x, labels)?;
    let params = match hp {
        Hyperparams::Logistic { lambda, iterations } => {
            ModelParams::Logistic(fit_logistic(x, labels, lambda, iterations))
        }
        Hyperparams::BoostedStumps {
            rounds,
            learning_rate,
        } => {
            let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
            ModelParams::BoostedStumps(fit_stumps(
                x,
                &y,
                StumpLoss::Logistic,
                rounds,
                learning_rate,
            ))
        }
    };
    Ok(TrainedClassifier {
        family: hp.family(),
        hyperparams: hp,
        params,
        training_seed: seed,
        feature_names: x.names.clone(),
        feature_parents: x.parents.clone(),
    })
}

/// Seeded stratified split into (train, validation) row indices.
pub fn stratified_split(labels: &[bool], share: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let k = ((idx.len() as f64 * share).round() as usize).min(idx.len().saturating_sub(1));
        valid.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    (train, valid)
}

fn default_hyperparams(family: ModelFamily) -> Hyperparams {
    match family {
        ModelFamily::Logistic => Hyperparams::Logistic {
            lambda: LOGISTIC_LAMBDAS[1],
            iterations: LOGISTIC_ITERATIONS,
        },
        ModelFamily::BoostedStumps => Hyperparams::BoostedStumps {
            rounds: STUMP_ROUNDS[1],
            learning_rate: STUMP_RATES[0],
        },
    }
}

/// Validation AUC a fitted candidate must beat, in standard errors of the
/// AUC of an uninformative score, before it is preferred to the
/// intercept-only model.
pub const NULL_MARGIN_SE: f64 = 2.0;

/// Intercept-only settings of a family.
pub fn null_hyperparams(family: ModelFamily) -> Hyperparams {
    match family {
        ModelFamily::Logistic => Hyperparams::Logistic {
            lambda: LOGISTIC_LAMBDAS[LOGISTIC_LAMBDAS.len() - 1],
            iterations: 0,
        },
        ModelFamily::BoostedStumps => Hyperparams::BoostedStumps {
            rounds: 0,
            learning_rate: STUMP_RATES[0],
        },
    }
}

/// Picks hyperparameters from the fixed grid by AUC on a seeded inner
/// validation split. The intercept-only model wins unless some candidate
/// clears `0.5` by [`NULL_MARGIN_SE`] standard errors. Falls back to the
/// grid default when either class is too small to appear on both sides of
/// the split.
pub fn tune(
    x: &FeatureMatrix,
    labels: &[bool],
    family: ModelFamily,
    seed: u64,
) -> Result<Hyperparams> {
    check_labels(x, labels)?;
    let (tr, va) = stratified_split(labels, VALIDATION_SHARE, seed);
    let ytr: Vec<bool> = tr.iter().map(|&i| labels[i]).collect();
    let yva: Vec<bool> = va.iter().map(|&i| labels[i]).collect();
    let two_class = |v: &[bool]| v.iter().any(|&l| l) && v.iter().any(|&l| !l);
    if !two_class(&ytr) || !two_class(&yva) {
        return Ok(default_hyperparams(family));
    }
    let (xtr, xva) = (x.select_rows(&tr), x.select_rows(&va));
    let pos = yva.iter().filter(|&&l| l).count() as f64;
    let neg = yva.len() as f64 - pos;
    let null_se = ((pos + neg + 1.0) / (12.0 * pos * neg)).sqrt();
    let mut best = (0.5 + NULL_MARGIN_SE * null_se, null_hyperparams(family));
    let mut consider = |auc: f64, hp: Hyperparams| {
        if auc > best.0 {
            best = (auc, hp);
        }
    };
    match family {
        ModelFamily::Logistic => {
            for lambda in LOGISTIC_LAMBDAS {
                let m = fit_logistic(&xtr, &ytr, lambda, LOGISTIC_ITERATIONS);
                consider(
                    roc_auc(&m.predict_proba(&xva), &yva)?,
                    Hyperparams::Logistic {
                        lambda,
                        iterations: LOGISTIC_ITERATIONS,
                    },
                );
            }
        }
        ModelFamily::BoostedStumps => {
            let y: Vec<f64> = ytr.iter().map(|&l| f64::from(u8::from(l))).collect();
            let max_rounds = *STUMP_ROUNDS.iter().max().unwrap();
            for learning_rate in STUMP_RATES {
                let m = fit_stumps(&xtr, &y, StumpLoss::Logistic, max_rounds, learning_rate);
                for (rounds, p) in STUMP_ROUNDS
                    .iter()
                    .zip(m.staged_predict(&xva, &STUMP_ROUNDS))
                {
                    consider(
                        roc_auc(&p, &yva)?,
                        Hyperparams::BoostedStumps {
                            rounds: *rounds,
                            learning_rate,
                        },
                    );
                }
            }
        }
    }
    Ok(best.1)
}

/// Tunes on an inner validation split, then refits on all rows.
pub fn train(
    x: &FeatureMatrix,
    labels: &[bool],
    family: ModelFamily,
    seed: u64,
) -> Result<TrainedClassifier> {
    let hp = tune(x, labels, family, seed)?;
    train_with(x, labels, hp, seed)
}

/// Per-column importance, largest first; ties keep first-seen column order.
pub fn feature_importance(model: &TrainedClassifier) -> Vec<(String, f64)> {
    let raw: Vec<f64> = match &model.params {
        ModelParams::Logistic(m) => m.weights.iter().map(|w| w.abs()).collect(),
        ModelParams::BoostedStumps(m) => m.gains(model.feature_names.len()),
    };
    let mut out: Vec<(String, f64)> = Vec::new();
    for (parent, v) in model.feature_parents.iter().zip(raw) {
        match out.iter_mut().find(|(p, _)| p == parent) {
            Some(e) => e.1 += v,
            None => out.push((parent.clone(), v)),
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}

/// Binary labels for `target`; `None` where the target cell is missing.
///
/// Categorical targets need exactly two observed levels; the positive class
/// is `positive` when given, otherwise the lexicographically larger level.
/// Numeric targets must be 0/1.
pub fn binary_labels(
    ds: &Dataset,
    target: &str,
    positive: Option<&str>,
) -> Result<Vec<Option<bool>>> {
    let (_, col) = ds.column_by_name(target)?;
    match col {
        ColumnData::Numeric(v) => v
            .iter()
            .map(|&x| {
                if x.is_nan() {
                    Ok(None)
                } else if x == 0.0 || x == 1.0 {
                    Ok(Some(x == 1.0))
                } else {
                    Err(AuditError::InvalidArgument(format!(
                        "target `{target}` is not binary"
                    )))
                }
            })
            .collect(),
        ColumnData::Categorical { codes, levels } => {
            let mut used: Vec<&str> = Vec::new();
            for &c in codes {
                if c != MISSING_CODE && !used.contains(&levels[c as usize].as_str()) {
                    used.push(&levels[c as usize]);
                }
            }
            if used.len() > 2 {
                return Err(AuditError::InvalidArgument(format!(
                    "target `{target}` has {} levels",
                    used.len()
                )));
            }
            let pos = match positive {
                Some(p) => p.to_string(),
                None => used.iter().max().map(|s| s.to_string()).unwrap_or_default(),
            };
            Ok(codes
                .iter()
                .map(|&c| (c != MISSING_CODE).then(|| levels[c as usize] == pos))
                .collect())
        }
    }
}

/// Encoder plus classifier, trained from a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularClassifier {
    pub encoder: Encoder,
    pub model: TrainedClassifier,
}

impl TabularClassifier {
    /// Fits on the rows of `ds` whose target is present.
    pub fn fit(
        ds: &Dataset,
        target: &str,
        predictors: &[String],
        family: ModelFamily,
        seed: u64,
    ) -> Result<Self> {
        if predictors.iter().any(|p| p == target) {
            return Err(AuditError::TargetInPredictors(target.to_string()));
        }
        let labels = binary_labels(ds, target, None)?;
        let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_some()).collect();
        if rows.is_empty() {
            return Err(AuditError::AllMissing(format!(" in target `{target}`")));
        }
        let y: Vec<bool> = rows.iter().map(|&i| labels[i].unwrap()).collect();
        let sub = ds.select_rows(&rows);
        let all: Vec<usize> = (0..sub.row_count()).collect();
        let (encoder, x) = encode(&sub, predictors, &all)?;
        let model = train(&x, &y, family, seed)?;
        Ok(TabularClassifier { encoder, model })
    }

    pub fn predict_proba(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let x = self.encoder.transform(ds)?;
        self.model.predict_proba(&x)
    }
}

/// Boosted-stump regressor with squared loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpRegressor {
    pub encoder: Encoder,
    pub model: StumpEnsemble,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionScores {
    pub rmse: f64,
    pub mae: f64,
}

impl StumpRegressor {
    pub fn fit(
        ds: &Dataset,
        target: &str,
        predictors: &[String],
        rounds: usize,
        learning_rate: f64,
    ) -> Result<Self> {
        if predictors.iter().any(|p| p == target) {
            return Err(AuditError::TargetInPredictors(target.to_string()));
        }
        let y = ds.numeric(target)?;
        let rows: Vec<usize> = (0..y.len()).filter(|&i| !y[i].is_nan()).collect();
        if rows.is_empty() {
            return Err(AuditError::AllMissing(format!(" in target `{target}`")));
        }
        let sub = ds.select_rows(&rows);
        let all: Vec<usize> = (0..rows.len()).collect();
        let (encoder, x) = encode(&sub, predictors, &all)?;
        let yt: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        let model = fit_stumps(&x, &yt, StumpLoss::Squared, rounds, learning_rate);
        Ok(StumpRegressor { encoder, model })
    }

    pub fn predict(&self, ds: &Dataset) -> Result<Vec<f64>> {
        Ok(self.model.predict(&self.encoder.transform(ds)?))
    }

    /// RMSE and MAE over rows with a present target.
    pub fn score(&self, ds: &Dataset, target: &str) -> Result<RegressionScores> {
        let pred = self.predict(ds)?;
        let y = ds.numeric(target)?;
        let pairs: Vec<(f64, f64)> = pred
            .into_iter()
            .zip(y.iter().copied())
            .filter(|p| !p.1.is_nan())
            .collect();
        if pairs.is_empty() {
            return Err(AuditError::AllMissing(format!(" in target `{target}`")));
        }
        let n = pairs.len() as f64;
        Ok(RegressionScores {
            rmse: (pairs.iter().map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n).sqrt(),
            mae: pairs.iter().map(|(p, t)| (p - t).abs()).sum::<f64>() / n,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnSpec, Schema};
    use rand::Rng;

    fn driven_fixture(seed: u64, n: usize) -> Dataset {
        let s = Schema::new(vec![
            ColumnSpec::numeric("a"),
            ColumnSpec::numeric("b"),
            ColumnSpec::categorical("c"),
            ColumnSpec::categorical("y"),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<[String; 4]> = (0..n)
            .map(|_| {
                let a: f64 = rng.random_range(-2.0..2.0);
                let b: f64 = rng.random_range(-2.0..2.0);
                let c = ["p", "q", "r"][rng.random_range(0..3)];
                let noise: f64 = rng.random_range(-0.5..0.5);
                let y = if 2.0 * a + 0.3 * b + noise > 0.0 {
                    "1"
                } else {
                    "0"
                };
                [a.to_string(), b.to_string(), c.to_string(), y.to_string()]
            })
            .collect();
        Dataset::from_records(s, rows).unwrap()
    }

    fn predictors() -> Vec<String> {
        vec!["a".into(), "b".into(), "c".into()]
    }

    #[test]
    fn driving_column_ranks_first_for_both_families() {
        let ds = driven_fixture(1, 400);
        for family in [ModelFamily::Logistic, ModelFamily::BoostedStumps] {
            let m = TabularClassifier::fit(&ds, "y", &predictors(), family, 3).unwrap();
            let imp = feature_importance(&m.model);
            assert_eq!(imp[0].0, "a");
            // permutation oracle: shuffling `a` costs more AUC than any other column
            let labels: Vec<bool> = binary_labels(&ds, "y", None)
                .unwrap()
                .into_iter()
                .map(Option::unwrap)
                .collect();
            let base = roc_auc(&m.predict_proba(&ds).unwrap(), &labels).unwrap();
            let mut drops = Vec::new();
            for col in predictors() {
                let mut perm: Vec<usize> = (0..ds.row_count()).collect();
                perm.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
                let shuffled = ds.select_rows(&perm);
                let mut cols: Vec<ColumnData> = ds.columns().to_vec();
                let idx = ds.schema().index_of(&col).unwrap();
                cols[idx] = shuffled.column(idx).clone();
                let permuted = Dataset::from_columns(ds.schema().clone(), cols).unwrap();
                let auc = roc_auc(&m.predict_proba(&permuted).unwrap(), &labels).unwrap();
                drops.push((col, base - auc));
            }
            drops.sort_by(|x, y| y.1.total_cmp(&x.1));
            assert_eq!(drops[0].0, "a");
        }
    }

    #[test]
    fn independent_labels_give_chance_auc() {
        let ds = driven_fixture(2, 600);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let labels: Vec<bool> = (0..600).map(|_| rng.random_bool(0.5)).collect();
        let (tr, va) = stratified_split(&labels, 0.3, 5);
        let x = encode(&ds, &predictors(), &tr).unwrap().1;
        let ytr: Vec<bool> = tr.iter().map(|&i| labels[i]).collect();
        let yva: Vec<bool> = va.iter().map(|&i| labels[i]).collect();
        for family in [ModelFamily::Logistic, ModelFamily::BoostedStumps] {
            let m = train(&x.select_rows(&tr), &ytr, family, 1).unwrap();
            let auc = roc_auc(&m.predict_proba(&x.select_rows(&va)).unwrap(), &yva).unwrap();
            assert!((0.4..=0.6).contains(&auc), "{family:?} {auc}");
        }
    }

    #[test]
    fn training_is_bit_identical_per_seed() {
        let ds = driven_fixture(3, 200);
        for family in [ModelFamily::Logistic, ModelFamily::BoostedStumps] {
            let a = TabularClassifier::fit(&ds, "y", &predictors(), family, 7).unwrap();
            let b = TabularClassifier::fit(&ds, "y", &predictors(), family, 7).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_class_and_target_leak_rejected() {
        let ds = driven_fixture(4, 50);
        let x = encode(&ds, &predictors(), &[0, 1]).unwrap().1;
        assert!(matches!(
            train(&x, &[true; 50], ModelFamily::Logistic, 0),
            Err(AuditError::SingleClass)
        ));
        let mut with_target = predictors();
        with_target.push("y".into());
        assert!(matches!(
            TabularClassifier::fit(&ds, "y", &with_target, ModelFamily::Logistic, 0),
            Err(AuditError::TargetInPredictors(_))
        ));
    }

    #[test]
    fn single_nonzero_coefficient_ranks_first() {
        let model = TrainedClassifier {
            family: ModelFamily::Logistic,
            hyperparams: default_hyperparams(ModelFamily::Logistic),
            params: ModelParams::Logistic(LogisticModel {
                weights: vec![0.0, 0.0, -2.0, 0.0],
                bias: 0.0,
                lambda: 0.0,
            }),
            training_seed: 0,
            feature_names: vec![
                "x".into(),
                "x:missing".into(),
                "c=a".into(),
                "c=<missing>".into(),
            ],
            feature_parents: vec!["x".into(), "x".into(), "c".into(), "c".into()],
        };
        let imp = feature_importance(&model);
        assert_eq!(imp, vec![("c".to_string(), 2.0), ("x".to_string(), 0.0)]);
    }

    #[test]
    fn regression_variant_reports_errors() {
        let s = Schema::new(vec![ColumnSpec::numeric("x"), ColumnSpec::numeric("t")]).unwrap();
        let rows: Vec<[String; 2]> = (0..50)
            .map(|i| [i.to_string(), (if i < 25 { 1 } else { 5 }).to_string()])
            .collect();
        let ds = Dataset::from_records(s, rows).unwrap();
        let m = StumpRegressor::fit(&ds, "t", &["x".into()], 100, 0.3).unwrap();
        let sc = m.score(&ds, "t").unwrap();
        assert!(sc.rmse < 0.1 && sc.mae <= sc.rmse);
    }

    #[test]
    fn binary_label_rules() {
        let s = Schema::new(vec![ColumnSpec::categorical("y"), ColumnSpec::numeric("n")]).unwrap();
        let ds = Dataset::from_records(s, [["no", "0"], ["yes", "1"], ["", ""]]).unwrap();
        assert_eq!(
            binary_labels(&ds, "y", None).unwrap(),
            vec![Some(false), Some(true), None]
        );
        assert_eq!(
            binary_labels(&ds, "n", None).unwrap(),
            vec![Some(false), Some(true), None]
        );
        assert_eq!(binary_labels(&ds, "y", Some("no")).unwrap()[0], Some(true));
    }
}
