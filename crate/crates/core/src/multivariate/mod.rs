//! Joint-distribution fidelity: correlations, discriminator, train-on-
//! synthetic comparison, survival curves and consistency rules.

pub mod correlation;
pub mod discriminator;
pub mod rules;
pub mod survival;
pub mod tstr;

pub use correlation::{
    correlation_pair, pcd, pcd_matrices, pearson, CorrelationMatrix, CorrelationMatrixPair, Pcd,
};
pub use discriminator::{
    discriminator_metrics, pmse, DiscriminatorResult, DiscriminatorRun, MeanSd,
};
pub use rules::{
    consistency_rate, evaluate_rule, parse_expression, parse_rule, parse_rules, ClinicalRule,
    CmpOp, ConsistencyResult, Expr, Operand, RuleCount, RuleError,
};
pub use survival::{
    kaplan_meier, log_rank, survival_report, LogRank, SurvivalCurve, SurvivalReport,
};
pub use tstr::{tstr_compare, tstr_repeat_seed, tstr_split, TstrResult, TstrRun, TSTR_HOLDOUT};
