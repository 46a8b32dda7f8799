use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

/// ROC-AUC plus the curve points `(fpr, tpr)` from (0,0) to (1,1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub auc: f64,
    pub points: Vec<(f64, f64)>,
}

fn class_counts(labels: &[bool]) -> Result<(usize, usize)> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(AuditError::SingleClass);
    }
    Ok((pos, neg))
}

/// Mann-Whitney AUC with midranks for tied scores.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(AuditError::ShapeMismatch(scores.len(), labels.len()));
    }
    let (pos, neg) = class_counts(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += midrank * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// ROC curve with one point per distinct score threshold.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    let auc = roc_auc(scores, labels)?;
    let (pos, neg) = class_counts(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve { auc, points })
}

/// Normalized DCG of `candidate` with relevances taken from `reference`.
pub fn ndcg(reference: &[(String, f64)], candidate: &[String]) -> Result<f64> {
    if reference.len() != candidate.len() {
        return Err(AuditError::FeatureMismatch(format!(
            "{} reference features vs {} candidates",
            reference.len(),
            candidate.len()
        )));
    }
    let mut rel = Vec::with_capacity(candidate.len());
    for (k, name) in candidate.iter().enumerate() {
        if candidate[..k].contains(name) {
            return Err(AuditError::FeatureMismatch(format!(
                "duplicate feature `{name}`"
            )));
        }
        let r = reference
            .iter()
            .find(|(f, _)| f == name)
            .ok_or_else(|| AuditError::FeatureMismatch(format!("unknown feature `{name}`")))?;
        rel.push(r.1);
    }
    let dcg = |v: &[f64]| -> f64 {
        v.iter()
            .enumerate()
            .map(|(i, r)| r / ((i + 2) as f64).log2())
            .sum()
    };
    let mut ideal = rel.clone();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let best = dcg(&ideal);
    if best <= 0.0 {
        return Ok(1.0);
    }
    Ok(dcg(&rel) / best)
}
