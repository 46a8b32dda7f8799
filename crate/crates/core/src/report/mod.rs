//! Audit orchestration, verdicts and the JSON report.

pub mod config;
pub mod svg;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{population_stats, ColumnKind, ColumnSummary, Dataset, Schema};
use crate::error::{AuditError, Result};
use crate::multivariate::{
    consistency_rate, correlation_pair, discriminator_metrics, parse_rules, pcd, survival_report,
    tstr_compare, ConsistencyResult, CorrelationMatrixPair, DiscriminatorResult, Pcd,
    SurvivalReport, TstrResult,
};
use crate::privacy::{
    attribute_report, canary_campaign, dcr_summary, file_membership_htest, file_membership_trial,
    membership_inference_grid, AttributeOptions, AttributeReport, CanaryCampaign, DcrSummary,
    FileMembershipTrial, MembershipCurve, MembershipHTest,
};
use crate::seed::derive;
use crate::univariate::{marginal_report, support_coverage, MarginalMetric, SupportCoverage};

pub use config::AuditConfig;

/// Version of the report layout.
pub const REPORT_VERSION: &str = "1.0";

/// Outcome of one metric computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Block<T> {
    Ok { result: T },
    Skipped { reason: String },
    Error { message: String },
}

impl<T> Block<T> {
    fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(result) => Block::Ok { result },
            Err(e) => Block::Error {
                message: e.to_string(),
            },
        }
    }

    fn skipped(reason: impl Into<String>) -> Self {
        Block::Skipped {
            reason: reason.into(),
        }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Block::Ok { result } => Some(result),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetShape {
    pub role: String,
    pub records: usize,
    pub columns: usize,
    pub numeric_columns: usize,
    pub categorical_columns: usize,
    pub event_time_columns: usize,
    pub missing_cells: usize,
}

impl DatasetShape {
    fn of(role: &str, ds: &Dataset) -> Self {
        let kinds: Vec<ColumnKind> = ds.schema().columns().iter().map(|c| c.kind).collect();
        let count = |k| kinds.iter().filter(|&&x| x == k).count();
        DatasetShape {
            role: role.to_string(),
            records: ds.row_count(),
            columns: ds.column_count(),
            numeric_columns: count(ColumnKind::Numeric),
            categorical_columns: count(ColumnKind::Categorical),
            event_time_columns: count(ColumnKind::EventTime),
            missing_cells: ds.columns().iter().map(|c| c.missing_count()).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub tool_version: String,
    pub seed: u64,
    /// Seconds since the Unix epoch; present only when requested.
    pub generated_at_unix: Option<u64>,
    pub datasets: Vec<DatasetShape>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSection {
    pub pcd: Pcd,
    pub matrices: CorrelationMatrixPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySection {
    pub real: ConsistencyResult,
    pub synthetic: ConsistencyResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub population: Block<Vec<ColumnSummary>>,
    pub marginals: Block<Vec<MarginalMetric>>,
    pub support_coverage: Block<SupportCoverage>,
    pub correlation: Block<CorrelationSection>,
    pub discriminator: Block<DiscriminatorResult>,
    pub tstr: Block<TstrResult>,
    pub survival: Block<SurvivalReport>,
    pub consistency: Block<ConsistencySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileMembershipSection {
    pub trial: FileMembershipTrial,
    pub htest: MembershipHTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub membership: Block<Vec<MembershipCurve>>,
    pub file_membership: Block<FileMembershipSection>,
    pub attribute: Block<AttributeReport>,
    pub dcr: Block<DcrSummary>,
    pub exposure: Block<CanaryCampaign>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessOrEqual,
    #[serde(rename = ">=")]
    GreaterOrEqual,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Less => "<",
            Comparison::LessOrEqual => "<=",
            Comparison::GreaterOrEqual => ">=",
        }
    }

    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Less => value < threshold,
            Comparison::LessOrEqual => value <= threshold,
            Comparison::GreaterOrEqual => value >= threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Skipped,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub metric: String,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub comparison: Comparison,
    pub outcome: Outcome,
    pub detail: String,
}

impl Verdict {
    /// Pass when `value comparison threshold` holds.
    pub fn judge(
        metric: &str,
        value: f64,
        threshold: f64,
        comparison: Comparison,
        detail: impl Into<String>,
    ) -> Self {
        Verdict {
            metric: metric.to_string(),
            value: Some(value),
            threshold: Some(threshold),
            comparison,
            outcome: if comparison.holds(value, threshold) {
                Outcome::Pass
            } else {
                Outcome::Fail
            },
            detail: detail.into(),
        }
    }

    fn from_block<T>(
        metric: &str,
        block: &Block<T>,
        threshold: Option<f64>,
        comparison: Comparison,
        judge: impl FnOnce(&T) -> Verdict,
    ) -> Self {
        let blank = |outcome, detail: &str| Verdict {
            metric: metric.to_string(),
            value: None,
            threshold,
            comparison,
            outcome,
            detail: detail.to_string(),
        };
        match block {
            Block::Ok { result } => judge(result),
            Block::Skipped { reason } => blank(Outcome::Skipped, reason),
            Block::Error { message } => blank(Outcome::Error, message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub report_version: String,
    pub metadata: Metadata,
    pub fidelity: Block<FidelityReport>,
    pub privacy: Block<PrivacyReport>,
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<String>,
}

impl AuditReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| AuditError::io(path, e))
    }

    /// 2 when a verdict could not be computed, 1 when one fails, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.verdicts.iter().any(|v| v.outcome == Outcome::Error) {
            2
        } else if self.verdicts.iter().any(|v| v.outcome == Outcome::Fail) {
            1
        } else {
            0
        }
    }
}

/// Loaded input tables.
#[derive(Debug, Clone)]
pub struct AuditInputs {
    pub schema: Schema,
    pub real: Dataset,
    pub synthetic: Dataset,
    pub holdout: Option<Dataset>,
    pub holdout_synthetic: Option<Dataset>,
}

impl AuditInputs {
    pub fn load(config: &AuditConfig) -> Result<Self> {
        let d = &config.data;
        let schema = Schema::from_toml_file(&d.schema)?;
        let load = |p: &Path| Dataset::load_csv(p, &schema);
        Ok(AuditInputs {
            real: load(&d.real)?,
            synthetic: load(&d.synthetic)?,
            holdout: d.holdout.as_deref().map(load).transpose()?,
            holdout_synthetic: d.holdout_synthetic.as_deref().map(load).transpose()?,
            schema,
        })
    }
}

fn column_names(schema: &Schema) -> Vec<String> {
    schema.columns().iter().map(|c| c.name.clone()).collect()
}

fn fidelity(cfg: &AuditConfig, inp: &AuditInputs) -> FidelityReport {
    let f = &cfg.fidelity;
    let (real, syn) = (&inp.real, &inp.synthetic);
    let schema = &inp.schema;
    let seed = cfg.seed;
    let mut population = None;
    let mut marginals = None;
    let mut coverage = None;
    let mut correlation = None;
    let mut discriminator = None;
    let mut tstr = None;
    let mut survival = None;
    let mut consistency = None;
    rayon::scope(|s| {
        s.spawn(|_| population = Some(Block::from_result(population_stats(real, syn))));
        s.spawn(|_| marginals = Some(Block::from_result(marginal_report(real, syn, f.n_bins))));
        s.spawn(|_| {
            let cats: Vec<String> = schema
                .columns()
                .iter()
                .filter(|c| c.kind == ColumnKind::Categorical)
                .map(|c| c.name.clone())
                .collect();
            coverage = Some(if cats.is_empty() {
                Block::skipped("no categorical columns")
            } else {
                Block::from_result(support_coverage(real, syn, &cats))
            });
        });
        s.spawn(|_| {
            correlation = Some(Block::from_result(
                correlation_pair(real, syn, &column_names(schema)).and_then(|matrices| {
                    Ok(CorrelationSection {
                        pcd: pcd(&matrices)?,
                        matrices,
                    })
                }),
            ));
        });
        s.spawn(|_| {
            let d = &f.discriminator;
            discriminator = Some(if d.enabled {
                Block::from_result(discriminator_metrics(
                    real,
                    syn,
                    d.family,
                    d.folds,
                    d.repeats,
                    derive(seed, 1),
                ))
            } else {
                Block::skipped("disabled in config")
            });
        });
        s.spawn(|_| {
            let t = &f.tstr;
            let target = t.target.clone().or_else(|| {
                schema
                    .columns()
                    .iter()
                    .find(|c| c.target)
                    .map(|c| c.name.clone())
            });
            tstr = Some(match (t.enabled, target) {
                (false, _) => Block::skipped("disabled in config"),
                (true, None) => Block::skipped("no target column"),
                (true, Some(target)) => {
                    let predictors = if t.predictors.is_empty() {
                        column_names(schema)
                            .into_iter()
                            .filter(|c| *c != target)
                            .collect()
                    } else {
                        t.predictors.clone()
                    };
                    Block::from_result(tstr_compare(
                        real,
                        syn,
                        &target,
                        &predictors,
                        t.family,
                        derive(seed, 2),
                        t.repeats,
                    ))
                }
            });
        });
        s.spawn(|_| {
            survival = Some(match &f.survival {
                None => Block::skipped("no survival columns configured"),
                Some(sv) => Block::from_result(survival_report(
                    real,
                    syn,
                    &sv.time_column,
                    sv.group_column.as_deref(),
                )),
            });
        });
        s.spawn(|_| {
            consistency = Some(match &f.rules {
                None => Block::skipped("no rule file configured"),
                Some(path) => Block::from_result(
                    std::fs::read_to_string(path)
                        .map_err(|e| AuditError::io(path, e))
                        .and_then(|text| parse_rules(&text, schema))
                        .and_then(|rules| {
                            Ok(ConsistencySection {
                                real: consistency_rate(real, &rules)?,
                                synthetic: consistency_rate(syn, &rules)?,
                            })
                        }),
                ),
            });
        });
    });
    FidelityReport {
        population: population.expect("spawned"),
        marginals: marginals.expect("spawned"),
        support_coverage: coverage.expect("spawned"),
        correlation: correlation.expect("spawned"),
        discriminator: discriminator.expect("spawned"),
        tstr: tstr.expect("spawned"),
        survival: survival.expect("spawned"),
        consistency: consistency.expect("spawned"),
    }
}

fn privacy(cfg: &AuditConfig, inp: &AuditInputs) -> PrivacyReport {
    let p = &cfg.privacy;
    let (real, syn) = (&inp.real, &inp.synthetic);
    let schema = &inp.schema;
    let seed = cfg.seed;
    let mut membership = None;
    let mut file_membership = None;
    let mut attribute = None;
    let mut dcr = None;
    let mut exposure = None;
    rayon::scope(|s| {
        s.spawn(|_| {
            membership = Some(match (&p.membership.enabled, &inp.holdout) {
                (false, _) => Block::skipped("disabled in config"),
                (true, None) => Block::skipped("no holdout data configured"),
                (true, Some(h)) => Block::from_result(membership_inference_grid(
                    real,
                    h,
                    syn,
                    &p.membership.attacker_fractions,
                    derive(seed, 10),
                    &p.distance,
                )),
            });
        });
        s.spawn(|_| {
            file_membership = Some(
                match (
                    p.file_membership.enabled,
                    &inp.holdout,
                    &inp.holdout_synthetic,
                ) {
                    (false, ..) => Block::skipped("disabled in config"),
                    (true, Some(h), Some(hs)) => Block::from_result(
                        file_membership_trial(real, h, syn, hs, &p.distance, derive(seed, 11))
                            .and_then(|trial| {
                                let htest = file_membership_htest(
                                    &[trial.correct_fraction],
                                    &[trial.decisions],
                                    cfg.thresholds.htest_alpha,
                                )?;
                                Ok(FileMembershipSection { trial, htest })
                            }),
                    ),
                    (true, ..) => Block::skipped("needs holdout and holdout_synthetic data"),
                },
            );
        });
        s.spawn(|_| {
            let a = &p.attribute;
            let quasi = if a.quasi.is_empty() {
                schema.quasi_identifiers()
            } else {
                a.quasi.clone()
            };
            let targets = if a.targets.is_empty() {
                schema.sensitive_columns()
            } else {
                a.targets.clone()
            };
            attribute = Some(if !a.enabled {
                Block::skipped("disabled in config")
            } else if quasi.is_empty() {
                Block::skipped("no quasi-identifiers declared")
            } else if targets.is_empty() {
                Block::skipped("no sensitive columns declared")
            } else {
                let opts = AttributeOptions {
                    mode: a.mode,
                    matching: a.matching,
                    missing_weight: a.missing_weight,
                    gvf_threshold: a.gvf_threshold,
                    k_max: a.k_max,
                    seed: derive(seed, 12),
                };
                Block::from_result(attribute_report(real, syn, &quasi, &targets, &opts))
            });
        });
        s.spawn(|_| {
            dcr = Some(if p.dcr.enabled {
                Block::from_result(dcr_summary(
                    real,
                    syn,
                    &p.dcr.quasi_for_eq_class,
                    &p.distance,
                ))
            } else {
                Block::skipped("disabled in config")
            });
        });
        s.spawn(|_| {
            exposure = Some(match &p.exposure {
                Some(e) if e.enabled => {
                    let run = tempfile::tempdir()
                        .map_err(|err| AuditError::io(std::env::temp_dir(), err))
                        .and_then(|dir| {
                            canary_campaign(
                                real,
                                &e.adapter,
                                e.n_canaries,
                                &e.canary_space,
                                derive(seed, 13),
                                dir.path(),
                            )
                        });
                    match run {
                        Err(AuditError::AdapterNoScore) => Block::skipped(
                            "not assessed: the generator adapter cannot score records",
                        ),
                        r => Block::from_result(r),
                    }
                }
                Some(_) => Block::skipped("disabled in config"),
                None => Block::skipped("no generator adapter configured"),
            });
        });
    });
    PrivacyReport {
        membership: membership.expect("spawned"),
        file_membership: file_membership.expect("spawned"),
        attribute: attribute.expect("spawned"),
        dcr: dcr.expect("spawned"),
        exposure: exposure.expect("spawned"),
    }
}

fn skipped_privacy(reason: &str) -> PrivacyReport {
    PrivacyReport {
        membership: Block::skipped(reason),
        file_membership: Block::skipped(reason),
        attribute: Block::skipped(reason),
        dcr: Block::skipped(reason),
        exposure: Block::skipped(reason),
    }
}

/// Verdicts for the privacy tests, in fixed order.
pub fn verdicts(cfg: &AuditConfig, privacy: &Block<PrivacyReport>) -> Vec<Verdict> {
    let t = &cfg.thresholds;
    let p = match privacy {
        Block::Ok { result } => result.clone(),
        Block::Skipped { reason } => skipped_privacy(reason),
        Block::Error { message } => {
            let m = || message.clone();
            PrivacyReport {
                membership: Block::Error { message: m() },
                file_membership: Block::Error { message: m() },
                attribute: Block::Error { message: m() },
                dcr: Block::Error { message: m() },
                exposure: Block::Error { message: m() },
            }
        }
    };
    let variant = cfg.privacy.attribute.verdict_variant;
    vec![
        Verdict::from_block(
            "mi_risk_score",
            &p.membership,
            Some(t.mi_risk),
            Comparison::Less,
            |curves| {
                let worst = curves
                    .iter()
                    .max_by(|a, b| a.mi_risk_score.total_cmp(&b.mi_risk_score))
                    .expect("at least one fraction");
                Verdict::judge(
                    "mi_risk_score",
                    worst.mi_risk_score.max(0.0),
                    t.mi_risk,
                    Comparison::Less,
                    format!(
                        "largest score over attacker fractions (at {})",
                        worst.attacker_fraction
                    ),
                )
            },
        ),
        Verdict::from_block(
            "file_membership_p_value",
            &p.file_membership,
            Some(t.htest_alpha),
            Comparison::GreaterOrEqual,
            |s| {
                Verdict::judge(
                    "file_membership_p_value",
                    s.htest.p_value,
                    t.htest_alpha,
                    Comparison::GreaterOrEqual,
                    format!(
                        "p_hat {}; low risk when P = 1/2 is not rejected",
                        fmt_value(s.htest.p_hat)
                    ),
                )
            },
        ),
        Verdict::from_block(
            "attribute_risk",
            &p.attribute,
            Some(t.attribute_risk),
            Comparison::LessOrEqual,
            |a| {
                Verdict::judge(
                    "attribute_risk",
                    a.total_risk(variant),
                    t.attribute_risk,
                    Comparison::LessOrEqual,
                    format!(
                        "record-wise maximum over targets, {} adjustment",
                        variant.name()
                    ),
                )
            },
        ),
        Verdict::from_block(
            "dcr_high_risk_fraction",
            &p.dcr,
            Some(t.dcr_high_risk),
            Comparison::Less,
            |d| {
                Verdict::judge(
                    "dcr_high_risk_fraction",
                    d.high_risk_fraction,
                    t.dcr_high_risk,
                    Comparison::Less,
                    format!("{} records at distance 0", d.zero_dcr_records),
                )
            },
        ),
        Verdict::from_block(
            "canary_exposure",
            &p.exposure,
            None,
            Comparison::Less,
            |c| {
                Verdict::judge(
                    "canary_exposure",
                    c.mean_exposure,
                    c.threshold,
                    Comparison::Less,
                    format!(
                        "mean over {} canaries; threshold log2 of {}",
                        c.inserted.len(),
                        c.space_size
                    ),
                )
            },
        ),
    ]
}

fn warnings(fidelity: &Block<FidelityReport>, privacy: &Block<PrivacyReport>) -> Vec<String> {
    let mut w = Vec::new();
    if let Some(f) = fidelity.ok() {
        if f.discriminator.ok().is_some() {
            w.push(
                "pmse is the mean squared deviation of propensities from the synthetic share"
                    .into(),
            );
        }
    }
    if let Some(p) = privacy.ok() {
        if p.file_membership.ok().is_some() {
            w.push(
                "file membership tests the null P = 1/2; failing to reject it is read as low risk"
                    .into(),
            );
        }
        if let Some(d) = p.dcr.ok() {
            if d.zero_dcr_records > 0 {
                w.push(format!(
                    "{} real records have an exact copy in the synthetic data",
                    d.zero_dcr_records
                ));
            }
        }
    }
    w
}

/// Runs every enabled block on already-loaded inputs. Block failures are
/// recorded in the report; they do not abort the run.
pub fn run_audit_on(config: &AuditConfig, inputs: &AuditInputs) -> AuditReport {
    let (fidelity_block, privacy_block) = rayon::join(
        || {
            if config.fidelity.enabled {
                Block::Ok {
                    result: fidelity(config, inputs),
                }
            } else {
                Block::skipped("disabled in config")
            }
        },
        || {
            if config.privacy.enabled {
                Block::Ok {
                    result: privacy(config, inputs),
                }
            } else {
                Block::skipped("disabled in config")
            }
        },
    );
    let mut datasets = vec![
        DatasetShape::of("real", &inputs.real),
        DatasetShape::of("synthetic", &inputs.synthetic),
    ];
    if let Some(h) = &inputs.holdout {
        datasets.push(DatasetShape::of("holdout", h));
    }
    if let Some(h) = &inputs.holdout_synthetic {
        datasets.push(DatasetShape::of("holdout_synthetic", h));
    }
    let generated_at_unix = config.output.timestamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    });
    AuditReport {
        report_version: REPORT_VERSION.to_string(),
        metadata: Metadata {
            tool: "synthaudit".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            generated_at_unix,
            datasets,
        },
        verdicts: verdicts(config, &privacy_block),
        warnings: warnings(&fidelity_block, &privacy_block),
        fidelity: fidelity_block,
        privacy: privacy_block,
    }
}

/// Loads the configured files and runs the audit.
pub fn run_audit(config: &AuditConfig) -> Result<AuditReport> {
    config.validate()?;
    let inputs = AuditInputs::load(config)?;
    Ok(run_audit_on(config, &inputs))
}

/// Shortest decimal text of a value with at most six decimals.
pub fn fmt_value(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() < 1e-4 {
        return format!("{v:.3e}");
    }
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// One line per verdict: name, value, and outcome with its threshold.
pub fn render_verdicts(report: &AuditReport) -> String {
    let mut out = String::new();
    for v in &report.verdicts {
        let value = v.value.map_or_else(|| "-".to_string(), fmt_value);
        let status = match v.outcome {
            Outcome::Pass | Outcome::Fail => format!(
                "{} ({} {})",
                if v.outcome == Outcome::Pass {
                    "PASS"
                } else {
                    "FAIL"
                },
                v.comparison.symbol(),
                v.threshold.map_or_else(|| "-".to_string(), fmt_value)
            ),
            Outcome::Skipped => format!("SKIPPED ({})", v.detail),
            Outcome::Error => format!("ERROR ({})", v.detail),
        };
        out.push_str(&format!("{:<26} {:>12}  {}\n", v.metric, value, status));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundaries_follow_the_comparison() {
        assert_eq!(
            Verdict::judge("m", 0.2, 0.2, Comparison::Less, "").outcome,
            Outcome::Fail
        );
        assert_eq!(
            Verdict::judge("m", 0.05, 0.05, Comparison::LessOrEqual, "").outcome,
            Outcome::Pass
        );
        assert_eq!(
            Verdict::judge("m", 0.01, 0.01, Comparison::Less, "").outcome,
            Outcome::Fail
        );
        assert_eq!(
            Verdict::judge("m", 0.05, 0.05, Comparison::GreaterOrEqual, "").outcome,
            Outcome::Pass
        );
        assert_eq!(
            Verdict::judge("m", 0.0028, 0.2, Comparison::Less, "").outcome,
            Outcome::Pass
        );
        assert_eq!(
            Verdict::judge("m", 0.07, 0.05, Comparison::LessOrEqual, "").outcome,
            Outcome::Fail
        );
        assert_eq!(
            Verdict::judge("m", 0.00258, 0.01, Comparison::Less, "").outcome,
            Outcome::Pass
        );
    }

    #[test]
    fn value_formatting() {
        assert_eq!(fmt_value(0.0028), "0.0028");
        assert_eq!(fmt_value(0.2), "0.2");
        assert_eq!(fmt_value(16.0), "16");
        assert_eq!(fmt_value(0.00258), "0.00258");
        assert_eq!(fmt_value(1.5e-7), "1.500e-7");
    }

    #[test]
    fn rendered_lines() {
        let report = AuditReport {
            report_version: REPORT_VERSION.into(),
            metadata: Metadata {
                tool: "synthaudit".into(),
                tool_version: "0".into(),
                seed: 0,
                generated_at_unix: None,
                datasets: vec![],
            },
            fidelity: Block::skipped("x"),
            privacy: Block::skipped("x"),
            verdicts: vec![
                Verdict::judge("mi_risk_score", 0.0028, 0.2, Comparison::Less, ""),
                Verdict::judge("attribute_risk", 0.07, 0.05, Comparison::LessOrEqual, ""),
                Verdict::judge(
                    "dcr_high_risk_fraction",
                    0.00258,
                    0.01,
                    Comparison::Less,
                    "",
                ),
            ],
            warnings: vec![],
        };
        let text = render_verdicts(&report);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].ends_with("PASS (< 0.2)"), "{text}");
        assert!(lines[1].ends_with("FAIL (<= 0.05)"));
        assert!(lines[2].contains("0.00258") && lines[2].ends_with("PASS (< 0.01)"));
        assert_eq!(report.exit_code(), 1);
        let back = AuditReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
    }
}
