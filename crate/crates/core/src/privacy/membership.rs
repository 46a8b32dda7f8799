use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distance::{all_nearest, DistanceConfig, DistanceMode, DistanceSpace};
use crate::error::{AuditError, Result};

/// Offsets added to the base distance `H`, in distance units.
pub const THRESHOLD_OFFSETS: [u32; 5] = [0, 1, 2, 3, 5];
/// Attacker fractions evaluated by default.
pub const DEFAULT_ATTACKER_FRACTIONS: [f64; 4] = [0.1, 0.25, 0.5, 1.0];
const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    /// `None` when no record is declared a member.
    pub precision: Option<f64>,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipCurve {
    pub attacker_fraction: f64,
    pub attacker_records: usize,
    pub members_in_sample: usize,
    /// Smallest nearest-neighbor distance over the attacker's records.
    pub base_distance: f64,
    pub rows: Vec<ThresholdRow>,
    /// Index into `rows` used for the score.
    pub score_row: usize,
    /// `(precision − 0.5)·2`; may be negative.
    pub mi_risk_score: f64,
}

/// Distance step between thresholds: one column for Hamming, `1/p` of the
/// weighted mean for Gower over `p` columns.
fn unit(mode: DistanceMode, width: usize) -> f64 {
    match mode {
        DistanceMode::HammingBinned => 1.0,
        DistanceMode::EnhancedGower => 1.0 / width as f64,
    }
}

fn curve(
    fraction: f64,
    dists: &[f64],
    members: &[bool],
    sample: &[usize],
    unit: f64,
) -> MembershipCurve {
    let h = sample
        .iter()
        .map(|&i| dists[i])
        .fold(f64::INFINITY, f64::min);
    let total_members = sample.iter().filter(|&&i| members[i]).count();
    let rows: Vec<ThresholdRow> = THRESHOLD_OFFSETS
        .iter()
        .map(|&k| {
            let threshold = h + f64::from(k) * unit;
            let (mut tp, mut fp) = (0, 0);
            for &i in sample {
                if dists[i] <= threshold + EPS {
                    if members[i] {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            let fn_ = total_members - tp;
            let tn = sample.len() - total_members - fp;
            ThresholdRow {
                threshold,
                true_positives: tp,
                false_positives: fp,
                false_negatives: fn_,
                true_negatives: tn,
                precision: (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64),
                recall: if total_members == 0 {
                    0.0
                } else {
                    tp as f64 / total_members as f64
                },
            }
        })
        .collect();
    let score_row = rows
        .iter()
        .position(|r| r.recall >= 0.5)
        .unwrap_or(rows.len() - 1);
    let mi_risk_score = rows[score_row].precision.map_or(0.0, |p| (p - 0.5) * 2.0);
    MembershipCurve {
        attacker_fraction: fraction,
        attacker_records: sample.len(),
        members_in_sample: total_members,
        base_distance: h,
        rows,
        score_row,
        mi_risk_score,
    }
}

/// Membership inference over several attacker fractions. Nearest-neighbor
/// distances from every record of `r1 ∪ r2` to `s1` are computed once;
/// each fraction draws its own seeded attacker sample.
pub fn membership_inference_grid(
    r1: &Dataset,
    r2: &Dataset,
    s1: &Dataset,
    fractions: &[f64],
    seed: u64,
    distance: &DistanceConfig,
) -> Result<Vec<MembershipCurve>> {
    if r1.row_count() == 0 || r2.row_count() == 0 {
        return Err(AuditError::EmptySplit(
            "both real halves must be non-empty".into(),
        ));
    }
    if s1.row_count() == 0 {
        return Err(AuditError::EmptySynthetic);
    }
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(AuditError::InvalidArgument(format!(
            "attacker fraction {f} outside (0, 1]"
        )));
    }
    let pooled = r1.concat(r2)?;
    s1.ensure_same_schema(&pooled)?;
    let space = DistanceSpace::fit(distance, &pooled, &[s1])?;
    let q = space.encode(&pooled)?;
    let t = space.encode(s1)?;
    let dists: Vec<f64> = all_nearest(&q, &t, false, None)?
        .into_iter()
        .map(|n| n.distance)
        .collect();
    let members: Vec<bool> = (0..pooled.row_count())
        .map(|i| i < r1.row_count())
        .collect();
    let u = unit(space.mode(), q.width());
    Ok(fractions
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let n = pooled.row_count();
            let m = ((f * n as f64).round() as usize).clamp(1, n);
            let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(seed, k as u64));
            let mut sample = rand::seq::index::sample(&mut rng, n, m).into_vec();
            sample.sort_unstable();
            curve(f, &dists, &members, &sample, u)
        })
        .collect())
}

pub fn membership_inference(
    r1: &Dataset,
    r2: &Dataset,
    s1: &Dataset,
    attacker_fraction: f64,
    seed: u64,
    distance: &DistanceConfig,
) -> Result<MembershipCurve> {
    Ok(membership_inference_grid(r1, r2, s1, &[attacker_fraction], seed, distance)?.remove(0))
}
