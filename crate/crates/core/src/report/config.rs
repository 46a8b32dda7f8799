//! TOML audit configuration. Relative paths are resolved against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distance::DistanceConfig;
use crate::error::{AuditError, Result};
use crate::models::ModelFamily;
use crate::privacy::{CanarySpace, InferenceMode, LambdaVariant, MatchMode, SubprocessAdapter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub schema: PathBuf,
    /// Real records the generator was trained on.
    pub real: PathBuf,
    /// Synthetic records generated from `real`.
    pub synthetic: PathBuf,
    /// Real records withheld from training; enables membership inference.
    #[serde(default)]
    pub holdout: Option<PathBuf>,
    /// Synthetic records generated from `holdout`; enables the
    /// file-membership test.
    #[serde(default)]
    pub holdout_synthetic: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscriminatorConfig {
    pub enabled: bool,
    pub family: ModelFamily,
    pub folds: usize,
    pub repeats: usize,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        DiscriminatorConfig {
            enabled: true,
            family: ModelFamily::Logistic,
            folds: 5,
            repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TstrConfig {
    pub enabled: bool,
    /// Binary target; the schema's `target` column when unset.
    pub target: Option<String>,
    /// All other non-indicator columns when empty.
    pub predictors: Vec<String>,
    pub family: ModelFamily,
    pub repeats: usize,
}

impl Default for TstrConfig {
    fn default() -> Self {
        TstrConfig {
            enabled: true,
            target: None,
            predictors: Vec::new(),
            family: ModelFamily::Logistic,
            repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurvivalConfig {
    pub time_column: String,
    #[serde(default)]
    pub group_column: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FidelityConfig {
    pub enabled: bool,
    /// Histogram bins for numeric marginals.
    pub n_bins: usize,
    pub discriminator: DiscriminatorConfig,
    pub tstr: TstrConfig,
    pub survival: Option<SurvivalConfig>,
    /// Consistency rule file.
    pub rules: Option<PathBuf>,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        FidelityConfig {
            enabled: true,
            n_bins: 20,
            discriminator: DiscriminatorConfig::default(),
            tstr: TstrConfig::default(),
            survival: None,
            rules: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MembershipConfig {
    pub enabled: bool,
    pub attacker_fractions: Vec<f64>,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        MembershipConfig {
            enabled: true,
            attacker_fractions: crate::privacy::DEFAULT_ATTACKER_FRACTIONS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileMembershipConfig {
    pub enabled: bool,
}

impl Default for FileMembershipConfig {
    fn default() -> Self {
        FileMembershipConfig { enabled: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttributeConfig {
    pub enabled: bool,
    /// Schema quasi-identifiers when empty.
    pub quasi: Vec<String>,
    /// Schema sensitive columns when empty.
    pub targets: Vec<String>,
    pub mode: InferenceMode,
    pub matching: MatchMode,
    pub missing_weight: f64,
    pub gvf_threshold: f64,
    pub k_max: usize,
    /// λ′ variant whose total risk drives the verdict.
    pub verdict_variant: LambdaVariant,
}

impl Default for AttributeConfig {
    fn default() -> Self {
        let o = crate::privacy::AttributeOptions::default();
        AttributeConfig {
            enabled: true,
            quasi: Vec::new(),
            targets: Vec::new(),
            mode: o.mode,
            matching: o.matching,
            missing_weight: o.missing_weight,
            gvf_threshold: o.gvf_threshold,
            k_max: o.k_max,
            verdict_variant: LambdaVariant::NoErrors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcrConfig {
    pub enabled: bool,
    /// Grouping columns for equivalence classes; the full record when empty.
    pub quasi_for_eq_class: Vec<String>,
}

impl Default for DcrConfig {
    fn default() -> Self {
        DcrConfig {
            enabled: true,
            quasi_for_eq_class: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposureConfig {
    #[serde(default = "enabled")]
    pub enabled: bool,
    pub adapter: SubprocessAdapter,
    #[serde(default = "default_canaries")]
    pub n_canaries: usize,
    pub canary_space: CanarySpace,
}

fn enabled() -> bool {
    true
}

fn default_canaries() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrivacyConfig {
    pub enabled: bool,
    pub distance: DistanceConfig,
    pub membership: MembershipConfig,
    pub file_membership: FileMembershipConfig,
    pub attribute: AttributeConfig,
    pub dcr: DcrConfig,
    pub exposure: Option<ExposureConfig>,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig {
            enabled: true,
            distance: DistanceConfig::default(),
            membership: MembershipConfig::default(),
            file_membership: FileMembershipConfig::default(),
            attribute: AttributeConfig::default(),
            dcr: DcrConfig::default(),
            exposure: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Pass when the MI risk score is below this.
    pub mi_risk: f64,
    /// Pass when the attribute-inference risk is at or below this.
    pub attribute_risk: f64,
    /// Pass when the DCR high-risk fraction is below this.
    pub dcr_high_risk: f64,
    /// Pass when the file-membership p-value is at or above this.
    pub htest_alpha: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            mi_risk: crate::privacy::MI_RISK_THRESHOLD,
            attribute_risk: crate::privacy::ATTRIBUTE_RISK_THRESHOLD,
            dcr_high_risk: crate::privacy::DCR_RISK_THRESHOLD,
            htest_alpha: crate::privacy::DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub report: Option<PathBuf>,
    /// Records the wall-clock time in the report metadata.
    pub timestamp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub data: DataPaths,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fidelity: FidelityConfig,
    #[serde(default)]
    pub privacy: PrivacyConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub output: OutputConfig,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl AuditConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: AuditConfig =
            toml::from_str(text).map_err(|e| AuditError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes every relative path absolute with respect to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let d = &mut self.data;
        for p in [&mut d.schema, &mut d.real, &mut d.synthetic] {
            resolve(base, p);
        }
        for p in [
            d.holdout.as_mut(),
            d.holdout_synthetic.as_mut(),
            self.fidelity.rules.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, p);
        }
        if let Some(e) = self.privacy.exposure.as_mut() {
            if e.adapter.program.components().count() > 1 {
                resolve(base, &mut e.adapter.program);
            }
        }
        if let Some(r) = self.output.report.as_mut() {
            resolve(base, r);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AuditError::ConfigInvalid(m));
        let f = &self.fidelity;
        if f.n_bins == 0 {
            return bad("fidelity.n_bins must be positive".into());
        }
        if f.discriminator.folds < 2 || f.discriminator.repeats == 0 {
            return bad("discriminator needs folds ≥ 2 and repeats ≥ 1".into());
        }
        if f.tstr.repeats == 0 {
            return bad("tstr.repeats must be ≥ 1".into());
        }
        let p = &self.privacy;
        if p.distance.n_bins == 0 {
            return bad("privacy.distance.n_bins must be positive".into());
        }
        if let Some(x) = p
            .membership
            .attacker_fractions
            .iter()
            .find(|x| !(**x > 0.0 && **x <= 1.0))
        {
            return bad(format!("attacker fraction {x} outside (0, 1]"));
        }
        if p.membership.attacker_fractions.is_empty() {
            return bad("membership.attacker_fractions is empty".into());
        }
        if !(0.0..=1.0).contains(&p.attribute.missing_weight) {
            return bad("attribute.missing_weight must lie in [0, 1]".into());
        }
        let t = &self.thresholds;
        for (name, v) in [
            ("mi_risk", t.mi_risk),
            ("attribute_risk", t.attribute_risk),
            ("dcr_high_risk", t.dcr_high_risk),
            ("htest_alpha", t.htest_alpha),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("threshold {name} = {v} outside [0, 1]"));
            }
        }
        Ok(())
    }
}
