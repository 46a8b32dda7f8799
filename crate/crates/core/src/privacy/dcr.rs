use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distance::{all_nearest, DistanceConfig, DistanceMode, DistanceSpace, EncodedRecords};
use crate::error::{AuditError, Result};

/// Largest equivalence class whose exposed members count as high risk.
pub const HIGH_RISK_CLASS_SIZE: usize = 5;
/// High-risk fraction below which the copy check passes.
pub const DCR_RISK_THRESHOLD: f64 = 0.01;
const GOWER_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` ascending edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    fn build(values: &[f64], edges: Vec<f64>) -> Histogram {
        let nb = edges.len() - 1;
        let mut counts = vec![0; nb];
        for &v in values {
            let k = edges
                .partition_point(|e| *e <= v)
                .saturating_sub(1)
                .min(nb - 1);
            counts[k] += 1;
        }
        Histogram { edges, counts }
    }

    fn for_distances(values: &[f64], mode: DistanceMode, width: usize) -> Histogram {
        let edges = match mode {
            DistanceMode::HammingBinned => (0..=width + 1).map(|k| k as f64).collect(),
            DistanceMode::EnhancedGower => (0..=GOWER_BINS)
                .map(|k| k as f64 / GOWER_BINS as f64)
                .collect(),
        };
        Histogram::build(values, edges)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceKey {
    FullRecord,
    QuasiIdentifiers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcrSummary {
    pub mode: DistanceMode,
    /// Distances from each real record to its closest synthetic record.
    pub syn_to_real: Histogram,
    /// Distances from each real record to its closest other real record.
    pub real_to_real: Histogram,
    pub min_dcr: f64,
    pub median_dcr: f64,
    pub real_to_real_median: Option<f64>,
    pub zero_dcr_records: usize,
    pub equivalence_key: EquivalenceKey,
    /// Real row indices with DCR 0 in a class of at most five records.
    pub high_risk_records: Vec<usize>,
    pub high_risk_fraction: f64,
    pub low_risk: bool,
    #[serde(skip)]
    pub dcr: Vec<f64>,
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 {
        s[m]
    } else {
        (s[m - 1] + s[m]) / 2.0
    })
}

fn class_sizes(records: &EncodedRecords) -> Vec<usize> {
    let keys: Vec<Vec<u64>> = (0..records.len()).map(|i| records.row_key(i)).collect();
    let mut counts: HashMap<&[u64], usize> = HashMap::new();
    for k in &keys {
        *counts.entry(k.as_slice()).or_default() += 1;
    }
    keys.iter().map(|k| counts[k.as_slice()]).collect()
}

/// Distance to closest record for every real record, its real-to-real
/// baseline, and the share of exactly copied records that sit in small
/// equivalence classes. Classes use the full encoded record unless
/// `quasi_for_eq_class` names the grouping columns.
pub fn dcr_summary(
    real: &Dataset,
    synthetic: &Dataset,
    quasi_for_eq_class: &[String],
    distance: &DistanceConfig,
) -> Result<DcrSummary> {
    real.ensure_same_schema(synthetic)?;
    if synthetic.row_count() == 0 {
        return Err(AuditError::EmptySynthetic);
    }
    if real.row_count() == 0 {
        return Err(AuditError::EmptyInput("real dataset".into()));
    }
    let space = DistanceSpace::fit(distance, real, &[synthetic])?;
    let r = space.encode(real)?;
    let s = space.encode(synthetic)?;
    let dcr: Vec<f64> = all_nearest(&r, &s, false, None)?
        .into_iter()
        .map(|n| n.distance)
        .collect();
    let baseline: Vec<f64> = if real.row_count() > 1 {
        all_nearest(&r, &r, true, None)?
            .into_iter()
            .map(|n| n.distance)
            .collect()
    } else {
        Vec::new()
    };
    let (equivalence_key, sizes) = if quasi_for_eq_class.is_empty() {
        (EquivalenceKey::FullRecord, class_sizes(&r))
    } else {
        let cfg = DistanceConfig {
            columns: quasi_for_eq_class.to_vec(),
            ..distance.clone()
        };
        let q = DistanceSpace::fit(&cfg, real, &[synthetic])?;
        (
            EquivalenceKey::QuasiIdentifiers,
            class_sizes(&q.encode(real)?),
        )
    };
    let zero: Vec<usize> = (0..dcr.len()).filter(|&i| dcr[i] == 0.0).collect();
    let high_risk_records: Vec<usize> = zero
        .iter()
        .copied()
        .filter(|&i| sizes[i] <= HIGH_RISK_CLASS_SIZE)
        .collect();
    let high_risk_fraction = high_risk_records.len() as f64 / real.row_count() as f64;
    Ok(DcrSummary {
        mode: space.mode(),
        syn_to_real: Histogram::for_distances(&dcr, space.mode(), r.width()),
        real_to_real: Histogram::for_distances(&baseline, space.mode(), r.width()),
        min_dcr: dcr.iter().copied().fold(f64::INFINITY, f64::min),
        median_dcr: median(&dcr).unwrap_or(0.0),
        real_to_real_median: median(&baseline),
        zero_dcr_records: zero.len(),
        equivalence_key,
        high_risk_records,
        high_risk_fraction,
        low_risk: high_risk_fraction < DCR_RISK_THRESHOLD,
        dcr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnSpec, Schema};
    use rand::{Rng, SeedableRng};

    fn table(seed: u64, n: usize) -> Dataset {
        let s = Schema::new(vec![
            ColumnSpec::numeric("a"),
            ColumnSpec::numeric("b"),
            ColumnSpec::categorical("c"),
        ])
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<[String; 3]> = (0..n)
            .map(|_| {
                [
                    format!("{:.5}", rng.random_range(0.0..1.0)),
                    format!("{:.5}", rng.random_range(0.0..1.0)),
                    ["x", "y"][rng.random_range(0..2)].to_string(),
                ]
            })
            .collect();
        Dataset::from_records(s, rows).unwrap()
    }

    #[test]
    fn copied_unique_record_is_high_risk() {
        let real = table(1, 100);
        let syn = table(2, 100).concat(&real.select_rows(&[17])).unwrap();
        let d = dcr_summary(&real, &syn, &[], &DistanceConfig::gower()).unwrap();
        assert_eq!(d.high_risk_records, [17]);
        assert_eq!(d.high_risk_fraction, 0.01);
        assert!(!d.low_risk);
        assert_eq!(d.min_dcr, 0.0);
    }

    #[test]
    fn sixfold_duplicate_is_exempt() {
        let base = table(3, 50);
        let real = base.concat(&base.select_rows(&[4; 5])).unwrap();
        let syn = table(4, 50).concat(&base.select_rows(&[4])).unwrap();
        let d = dcr_summary(&real, &syn, &[], &DistanceConfig::gower()).unwrap();
        assert_eq!(d.zero_dcr_records, 6);
        assert!(d.high_risk_records.is_empty());
        assert!(d.low_risk);
    }

    #[test]
    fn self_comparison_counts_small_classes() {
        let base = table(5, 40);
        let real = base.concat(&base.select_rows(&[0; 5])).unwrap();
        let d = dcr_summary(&real, &real, &[], &DistanceConfig::gower()).unwrap();
        assert_eq!(d.zero_dcr_records, 45);
        assert_eq!(d.high_risk_records.len(), 39);
        assert_eq!(d.real_to_real.counts.iter().sum::<usize>(), 45);
    }

    #[test]
    fn hamming_histogram_has_integer_bins() {
        let real = table(6, 80);
        let syn = table(7, 80);
        let d = dcr_summary(&real, &syn, &[], &DistanceConfig::default()).unwrap();
        assert_eq!(d.syn_to_real.edges, [0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(d.syn_to_real.counts.iter().sum::<usize>(), 80);
    }

    #[test]
    fn quasi_grouping_is_coarser() {
        let real = table(8, 60);
        let d = dcr_summary(&real, &real, &["c".into()], &DistanceConfig::gower()).unwrap();
        assert_eq!(d.equivalence_key, EquivalenceKey::QuasiIdentifiers);
        assert!(d.high_risk_records.is_empty());
    }

    #[test]
    fn histogram_edges() {
        let h = Histogram::build(&[0.0, 0.5, 1.0, 1.0], vec![0.0, 0.5, 1.0]);
        assert_eq!(h.counts, [1, 3]);
    }
}
