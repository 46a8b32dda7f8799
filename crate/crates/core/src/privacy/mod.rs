//! Attack simulations and copy-protection metrics.

pub mod attribute;
pub mod dcr;
pub mod exposure;
pub mod file_membership;
pub mod membership;

pub use attribute::{
    attribute_inference, attribute_report, AttributeOptions, AttributeReport, AttributeRisk,
    InferenceMode, LambdaVariant, MatchMode, RecordComponent, VariantRisk,
    ATTRIBUTE_RISK_THRESHOLD,
};
pub use dcr::{
    dcr_summary, DcrSummary, EquivalenceKey, Histogram, DCR_RISK_THRESHOLD, HIGH_RISK_CLASS_SIZE,
};
pub use exposure::{
    canary_campaign, canary_ranks, exposure, CanaryCampaign, CanarySlot, CanarySpace,
    GeneratorAdapter, SubprocessAdapter, MAX_CANARY_SPACE,
};
pub use file_membership::{
    file_membership_htest, file_membership_trial, FileMembershipTrial, MembershipHTest,
    DEFAULT_ALPHA,
};
pub use membership::{
    membership_inference, membership_inference_grid, MembershipCurve, ThresholdRow,
    DEFAULT_ATTACKER_FRACTIONS, THRESHOLD_OFFSETS,
};

/// MI risk score below which membership inference passes.
pub const MI_RISK_THRESHOLD: f64 = 0.2;
