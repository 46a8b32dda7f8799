use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::data::Dataset;
use crate::distance::{all_nearest, DistanceConfig, DistanceSpace};
use crate::error::{AuditError, Result};
use crate::seed::splitmix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileMembershipTrial {
    pub decisions: usize,
    pub correct: usize,
    pub ties: usize,
    pub correct_fraction: f64,
}

/// Assigns every record of `r1 ∪ r2` to the half whose synthetic file holds
/// the closer nearest neighbor and scores the assignments. Ties are broken
/// by a coin flip derived from `seed` and the record's position.
pub fn file_membership_trial(
    r1: &Dataset,
    r2: &Dataset,
    s1: &Dataset,
    s2: &Dataset,
    distance: &DistanceConfig,
    seed: u64,
) -> Result<FileMembershipTrial> {
    for (name, d) in [("r1", r1), ("r2", r2), ("s1", s1), ("s2", s2)] {
        if d.row_count() == 0 {
            return Err(AuditError::EmptyInput(name.into()));
        }
    }
    if r1.row_count().abs_diff(r2.row_count()) > 1 {
        return Err(AuditError::InvalidArgument(format!(
            "real halves differ in size: {} vs {}",
            r1.row_count(),
            r2.row_count()
        )));
    }
    let pooled = r1.concat(r2)?;
    let space = DistanceSpace::fit(distance, &pooled, &[s1, s2])?;
    let q = space.encode(&pooled)?;
    let d1 = all_nearest(&q, &space.encode(s1)?, false, None)?;
    let d2 = all_nearest(&q, &space.encode(s2)?, false, None)?;
    let (mut correct, mut ties) = (0, 0);
    for (i, (a, b)) in d1.iter().zip(&d2).enumerate() {
        let first = if a.distance < b.distance {
            true
        } else if b.distance < a.distance {
            false
        } else {
            ties += 1;
            splitmix64(seed ^ i as u64) & 1 == 0
        };
        if first == (i < r1.row_count()) {
            correct += 1;
        }
    }
    let n = pooled.row_count();
    Ok(FileMembershipTrial {
        decisions: n,
        correct,
        ties,
        correct_fraction: correct as f64 / n as f64,
    })
}

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipHTest {
    pub trials: usize,
    pub decisions: usize,
    pub p_hat: f64,
    pub z: f64,
    pub p_value: f64,
    pub alpha: f64,
    /// True when `P = 1/2` is not rejected at `alpha`.
    pub low_risk: bool,
}

/// Two-sided normal test of `P = 1/2` on the pooled success proportion.
pub fn file_membership_htest(
    fractions: &[f64],
    per_trial_n: &[usize],
    alpha: f64,
) -> Result<MembershipHTest> {
    if fractions.is_empty() {
        return Err(AuditError::NoTrials);
    }
    if fractions.len() != per_trial_n.len() {
        return Err(AuditError::ShapeMismatch(
            fractions.len(),
            per_trial_n.len(),
        ));
    }
    let n: usize = per_trial_n.iter().sum();
    if n == 0 {
        return Err(AuditError::NoTrials);
    }
    let successes: f64 = fractions
        .iter()
        .zip(per_trial_n)
        .map(|(f, &k)| f * k as f64)
        .sum();
    let p_hat = successes / n as f64;
    let z = (p_hat - 0.5) / (0.25 / n as f64).sqrt();
    let p_value = erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
    Ok(MembershipHTest {
        trials: fractions.len(),
        decisions: n,
        p_hat,
        z,
        p_value,
        alpha,
        low_risk: p_value >= alpha,
    })
}
