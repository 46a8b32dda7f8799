//! Acceptance checks. Runs as a plain binary and prints one PASS or FAIL line
//! per criterion; the process fails if any criterion fails. An optional
//! argument restricts the run to criteria whose name contains it.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use synthaudit_core::data::{ColumnSpec, Dataset, Schema};
use synthaudit_core::distance::{
    all_nearest, all_nearest_sequential, gower_distance, DistanceConfig, DistanceSpace,
};
use synthaudit_core::models::ModelFamily;
use synthaudit_core::multivariate::{
    consistency_rate, correlation_pair, discriminator_metrics, evaluate_rule, kaplan_meier,
    log_rank, parse_expression, parse_rule, parse_rules, pcd, tstr_compare, tstr_repeat_seed,
    tstr_split, RuleError,
};
use synthaudit_core::privacy::{
    attribute_inference, attribute_report, canary_campaign, dcr_summary, exposure,
    file_membership_htest, file_membership_trial, membership_inference_grid, AttributeOptions,
    CanarySlot, CanarySpace, GeneratorAdapter, LambdaVariant, DEFAULT_ATTACKER_FRACTIONS,
};
use synthaudit_core::report::{run_audit_on, AuditConfig, AuditInputs, Outcome};
use synthaudit_core::sim::SimSpec;
use synthaudit_core::univariate::{ks_two_sample, marginal_report, MarginalKind};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fmt_err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn verdict_outcome(report: &synthaudit_core::report::AuditReport, metric: &str) -> Outcome {
    report
        .verdicts
        .iter()
        .find(|v| v.metric == metric)
        .map(|v| v.outcome)
        .unwrap_or(Outcome::Error)
}

// ---------------------------------------------------------------- distance

/// A cell of a mixed record before encoding.
#[derive(Clone, Copy)]
enum Cell {
    Num(Option<f64>),
    Cat(Option<u8>),
}

fn oracle_numeric(x: Option<f64>, y: Option<f64>) -> f64 {
    match (x, y) {
        (None, None) => 0.0,
        (None, _) | (_, None) => 1.0,
        (Some(x), Some(y)) => {
            let (mn, mx) = (x.min(y), x.max(y));
            if mn >= 0.0 {
                1.0 - (1.0 + mn) / (1.0 + mx)
            } else {
                1.0 - 1.0 / (1.0 + mx + mn.abs())
            }
        }
    }
}

fn oracle_gower(a: &[Cell], b: &[Cell], w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for m in 0..a.len() {
        if w[m] == 0.0 {
            continue;
        }
        let d = match (a[m], b[m]) {
            (Cell::Num(x), Cell::Num(y)) => oracle_numeric(x, y),
            // missing is a level of its own
            (Cell::Cat(x), Cell::Cat(y)) => f64::from(u8::from(x != y)),
            _ => unreachable!(),
        };
        num += w[m] * d;
        den += w[m];
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn encode_cell(c: Cell) -> f64 {
    match c {
        Cell::Num(v) => v.unwrap_or(f64::NAN),
        Cell::Cat(v) => v.map_or(255.0, f64::from),
    }
}

fn gower_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cases = [0usize; 5]; // both ≥ 0, a negative, one missing, both missing, categorical missing
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = rng.random_range(1..=8);
        let numeric: Vec<bool> = (0..p).map(|_| rng.random_bool(0.6)).collect();
        let w: Vec<f64> = (0..p)
            .map(|_| [0.0, 0.5, 1.0, 1.0, 2.0][rng.random_range(0..5)])
            .collect();
        let draw = |num: bool, rng: &mut ChaCha8Rng| {
            if num {
                Cell::Num((!rng.random_bool(0.15)).then(|| {
                    let v: f64 = rng.random_range(-50.0..200.0);
                    if rng.random_bool(0.2) {
                        v.round()
                    } else {
                        v
                    }
                }))
            } else {
                Cell::Cat((!rng.random_bool(0.15)).then(|| rng.random_range(0..4)))
            }
        };
        let a: Vec<Cell> = numeric.iter().map(|&n| draw(n, &mut rng)).collect();
        let b: Vec<Cell> = numeric.iter().map(|&n| draw(n, &mut rng)).collect();
        for (x, y) in a.iter().zip(&b) {
            match (x, y) {
                (Cell::Num(Some(x)), Cell::Num(Some(y))) if x.min(*y) >= 0.0 => cases[0] += 1,
                (Cell::Num(Some(_)), Cell::Num(Some(_))) => cases[1] += 1,
                (Cell::Num(None), Cell::Num(None)) => cases[3] += 1,
                (Cell::Num(_), Cell::Num(_)) => cases[2] += 1,
                (Cell::Cat(None), _) | (_, Cell::Cat(None)) => cases[4] += 1,
                _ => {}
            }
        }
        let ea: Vec<f64> = a.iter().copied().map(encode_cell).collect();
        let eb: Vec<f64> = b.iter().copied().map(encode_cell).collect();
        let got = gower_distance(&ea, &eb, &numeric, &w);
        let want = oracle_gower(&a, &b, &w);
        worst = worst.max((got - want).abs());
    }
    ensure(cases.iter().all(|&c| c > 0), || {
        format!("case coverage {cases:?}")
    })?;
    ensure(worst <= 1e-12, || format!("max abs error {worst:e}"))?;
    Ok(format!(
        "1000 pairs, max abs error {worst:.1e}, branch counts {cases:?}"
    ))
}

// ---------------------------------------------------------------- identity

fn identity_suite() -> Check {
    let spec = SimSpec {
        missing_rate: 0.05,
        target: true,
        ..SimSpec::default()
    };
    let real = spec.sample(1500, 21).map_err(fmt_err)?;
    let syn = real.clone();
    let m = marginal_report(&real, &syn, 20).map_err(fmt_err)?;
    let mut seen = HashMap::new();
    for r in &m {
        *seen.entry(format!("{:?}", r.metric)).or_insert(0) += 1;
        let want = if r.metric == MarginalKind::SupportCoverage {
            1.0
        } else {
            0.0
        };
        ensure(r.value == Some(want), || {
            format!("{} {:?} = {:?}", r.column, r.metric, r.value)
        })?;
    }
    for k in ["Ks", "Kl", "Wasserstein", "SupportCoverage"] {
        ensure(seen.contains_key(k), || format!("no {k} rows"))?;
    }
    let cols: Vec<String> = real
        .schema()
        .columns()
        .iter()
        .map(|c| c.name.clone())
        .collect();
    let p = pcd(&correlation_pair(&real, &syn, &cols).map_err(fmt_err)?).map_err(fmt_err)?;
    ensure(p.pcd_l1_mean == 0.0 && p.pcd_l2 == 0.0, || {
        format!("pcd {p:?}")
    })?;
    let rules = parse_rules(
        "low: n0 < 5\nodd: c0 == \"L2\" and y == \"yes\"\n",
        real.schema(),
    )
    .map_err(fmt_err)?;
    let a = consistency_rate(&real, &rules).map_err(fmt_err)?;
    let b = consistency_rate(&syn, &rules).map_err(fmt_err)?;
    ensure(a == b && a.inconsistent_records > 0, || {
        format!("{a:?} vs {b:?}")
    })?;
    Ok(format!(
        "{} marginal rows, pcd (0, 0), consistency {}/{} on both",
        m.len(),
        a.inconsistent_records,
        a.records
    ))
}

// ---------------------------------------------------------------- KS

fn ecdf_sup(a: &[f64], b: &[f64]) -> f64 {
    let mut d: f64 = 0.0;
    for &x in a.iter().chain(b) {
        let fa = a.iter().filter(|&&v| v <= x).count() as f64 / a.len() as f64;
        let fb = b.iter().filter(|&&v| v <= x).count() as f64 / b.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

/// `P(K > lambda)` from the alternating series summed until terms vanish.
fn kolmogorov_reference(lambda: f64) -> f64 {
    if lambda < 0.05 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..=100_000u64 {
        let jf = j as f64;
        let t = (-2.0 * jf * jf * lambda * lambda).exp();
        s += if j % 2 == 1 { t } else { -t };
        if t < 1e-300 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst_p: f64 = 0.0;
    let mut p_checked = 0;
    for case in 0..200 {
        let n1 = rng.random_range(5..300);
        let n2 = rng.random_range(5..300);
        let shift: f64 = rng.random_range(-0.5..0.5);
        let coarse = case % 3 == 0;
        let mut draw = |n: usize, mu: f64| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let v: f64 = mu + rng.random_range(0.0..1.0) + rng.random_range(0.0..1.0);
                    if coarse {
                        (v * 4.0).round() / 4.0
                    } else {
                        v
                    }
                })
                .collect()
        };
        let a = draw(n1, 0.0);
        let b = draw(n2, shift);
        let r = ks_two_sample(&a, &b).map_err(fmt_err)?;
        let d = ecdf_sup(&a, &b);
        ensure(r.statistic == d, || {
            format!("case {case}: statistic {} vs {d}", r.statistic)
        })?;
        let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
        if ne >= 20.0 {
            let p = kolmogorov_reference(ne.sqrt() * d);
            worst_p = worst_p.max((r.p_value - p).abs());
            p_checked += 1;
        }
    }
    ensure(worst_p <= 5e-3, || format!("p-value error {worst_p:e}"))?;
    Ok(format!(
        "200 pairs exact, {p_checked} p-values within {worst_p:.1e}"
    ))
}

// ---------------------------------------------------------------- λ′

fn lambda_formula() -> Check {
    // (1 + (0.23 * (1 - 0.0426))^3) / 2
    let want = 0.505_339;
    let got = LambdaVariant::ReferencePaper.lambda_prime(3);
    ensure((got - want).abs() <= 1e-6, || format!("k=3 gives {got}"))?;
    for k in 1..=10 {
        let [a, b, c] = LambdaVariant::ALL.map(|v| v.lambda_prime(k));
        ensure(a <= b && b <= c, || format!("k={k}: {a} {b} {c}"))?;
        ensure(b == 0.8 && c == 1.0, || format!("k={k}: {b} {c}"))?;
    }
    Ok(format!("lambda'(3) = {got:.7}, ordered for k in 1..=10"))
}

// ---------------------------------------------------------------- attribute

type Row = [Option<&'static str>; 4];
/// Quasi key `(q1, q2)` followed by the synthetic `t1` and `t2` values.
type GroupPlan = (
    &'static str,
    Option<&'static str>,
    [Option<&'static str>; 3],
    [Option<&'static str>; 3],
);

fn attribute_fixture() -> (Schema, Vec<Row>, Vec<Row>) {
    let schema = Schema::new(vec![
        ColumnSpec::categorical("q1"),
        ColumnSpec::categorical("q2"),
        ColumnSpec::categorical("t1"),
        ColumnSpec::categorical("t2"),
    ])
    .unwrap();
    let q1 = ["a", "b", "c"];
    let q2 = [Some("x"), Some("y"), None];
    let t = ["p", "q", "r"];
    let real: Vec<Row> = (0..50)
        .map(|i| {
            [
                Some(q1[i % 3]),
                q2[(i / 3) % 3],
                (i % 11 != 4).then_some(t[(i * 7) % 3]),
                (i % 9 != 2).then_some(t[(i / 2) % 3]),
            ]
        })
        .collect();
    // Synthetic groups: each quasi key that appears gets a strict majority
    // value per target; ("c", "y") and ("b", missing) never appear.
    let mut syn: Vec<Row> = Vec::new();
    let plan: [GroupPlan; 7] = [
        (
            "a",
            Some("x"),
            [Some("p"), Some("p"), Some("q")],
            [Some("r"), Some("r"), None],
        ),
        (
            "a",
            Some("y"),
            [Some("q"), Some("q"), Some("q")],
            [Some("p"), Some("q"), Some("p")],
        ),
        (
            "a",
            None,
            [None, None, Some("r")],
            [Some("q"), Some("q"), Some("p")],
        ),
        (
            "b",
            Some("x"),
            [Some("r"), Some("r"), Some("p")],
            [None, None, None],
        ),
        (
            "b",
            Some("y"),
            [Some("p"), Some("q"), Some("p")],
            [Some("r"), Some("q"), Some("r")],
        ),
        (
            "c",
            Some("x"),
            [Some("q"), None, Some("q")],
            [Some("p"), Some("p"), Some("p")],
        ),
        (
            "c",
            None,
            [None, None, Some("p")],
            [Some("q"), Some("r"), Some("r")],
        ),
    ];
    for (a, b, t1, t2) in plan {
        for j in 0..3 {
            syn.push([Some(a), b, t1[j], t2[j]]);
        }
    }
    (schema, real, syn)
}

fn to_dataset(schema: &Schema, rows: &[Row]) -> Dataset {
    Dataset::from_records(
        schema.clone(),
        rows.iter().map(|r| r.map(|c| c.unwrap_or("")).to_vec()),
    )
    .unwrap()
}

/// Per-record terms (1/f_s) · I_s · R_s of one target, recomputed from the
/// raw strings.
fn brute_force_terms(real: &[Row], syn: &[Row], target: usize) -> Vec<f64> {
    let key = |r: &Row| (r[0], r[1]);
    let mut f: HashMap<_, usize> = HashMap::new();
    for r in real {
        *f.entry(key(r)).or_default() += 1;
    }
    real.iter()
        .map(|r| {
            let matches: Vec<Option<&str>> = syn
                .iter()
                .filter(|s| key(s) == key(r))
                .map(|s| s[target])
                .collect();
            if matches.is_empty() {
                return 0.0;
            }
            let mut counts: HashMap<Option<&str>, usize> = HashMap::new();
            for m in &matches {
                *counts.entry(*m).or_default() += 1;
            }
            let top = *counts.values().max().unwrap();
            let modes: Vec<_> = counts.iter().filter(|(_, &c)| c == top).collect();
            assert_eq!(modes.len(), 1, "fixture must have a strict mode");
            let inferred = *modes[0].0;
            let r_s = match (r[target], inferred == r[target]) {
                (_, false) => 0.0,
                (None, true) => 0.5,
                (Some(_), true) => 1.0,
            };
            r_s / f[&key(r)] as f64
        })
        .collect()
}

fn attribute_oracle() -> Check {
    let (schema, real_rows, syn_rows) = attribute_fixture();
    let real = to_dataset(&schema, &real_rows);
    let syn = to_dataset(&schema, &syn_rows);
    let quasi = vec!["q1".to_string(), "q2".to_string()];
    let opts = AttributeOptions::default();
    let n = real_rows.len() as f64;
    let mut per_target = Vec::new();
    for (ti, name) in [(2usize, "t1"), (3, "t2")] {
        let terms = brute_force_terms(&real_rows, &syn_rows, ti);
        let got = attribute_inference(&real, &syn, &quasi, name, &opts).map_err(fmt_err)?;
        for v in LambdaVariant::ALL {
            let want = v.lambda_prime(2) * (terms.iter().sum::<f64>() / n);
            ensure(got.risk(v) == want, || {
                format!("{name} {}: {} vs {want}", v.name(), got.risk(v))
            })?;
        }
        per_target.push(terms);
    }
    let missing_weighted = (0..real_rows.len())
        .filter(|&i| {
            [(2, 0), (3, 1)]
                .iter()
                .any(|&(c, t)| real_rows[i][c].is_none() && per_target[t][i] > 0.0)
        })
        .count();
    ensure(missing_weighted > 0, || {
        "fixture exercises no missing-target weighting".into()
    })?;
    let total = attribute_report(&real, &syn, &quasi, &["t1".into(), "t2".into()], &opts)
        .map_err(fmt_err)?;
    let max_sum: f64 = (0..real_rows.len())
        .map(|i| per_target[0][i].max(per_target[1][i]))
        .sum();
    for v in LambdaVariant::ALL {
        let want = v.lambda_prime(2) * (max_sum / n);
        ensure(total.total_risk(v) == want, || {
            format!("total {}: {} vs {want}", v.name(), total.total_risk(v))
        })?;
    }
    Ok(format!(
        "50 records, risks t1 {:.6} t2 {:.6} total {:.6} (no_errors), {missing_weighted} half-weighted records",
        per_target[0].iter().sum::<f64>() / n,
        per_target[1].iter().sum::<f64>() / n,
        max_sum / n
    ))
}

// ---------------------------------------------------------------- DCR

fn wide() -> SimSpec {
    SimSpec {
        numeric: 8,
        categorical: 8,
        levels: 6,
        missing_rate: 0.0,
        target: false,
    }
}

fn replace_rows(syn: &Dataset, real: &Dataset, pairs: &[(usize, usize)]) -> Dataset {
    let mut rows: Vec<Vec<String>> = (0..syn.row_count())
        .map(|r| {
            syn.row_text(r)
                .into_iter()
                .map(Option::unwrap_or_default)
                .collect()
        })
        .collect();
    for &(s, r) in pairs {
        rows[s] = real
            .row_text(r)
            .into_iter()
            .map(Option::unwrap_or_default)
            .collect();
    }
    Dataset::from_records(syn.schema().clone(), rows).unwrap()
}

fn dcr_copy_detection() -> Check {
    let spec = wide();
    let real = spec.sample(2000, 31).map_err(fmt_err)?;
    let syn = spec.sample(2000, 32).map_err(fmt_err)?;
    let cfg = DistanceConfig::default();
    let base = dcr_summary(&real, &syn, &[], &cfg).map_err(fmt_err)?;
    ensure(base.zero_dcr_records == 0, || {
        format!(
            "independent data has {} exact matches",
            base.zero_dcr_records
        )
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, 2000, 20).into_vec();
    chosen.sort_unstable();
    let pairs: Vec<(usize, usize)> = chosen
        .iter()
        .enumerate()
        .map(|(k, &r)| (k * 97, r))
        .collect();
    let leaked = replace_rows(&syn, &real, &pairs);
    let s = dcr_summary(&real, &leaked, &[], &cfg).map_err(fmt_err)?;
    ensure(s.high_risk_records == chosen, || {
        format!("R_HR {:?}", s.high_risk_records)
    })?;
    ensure(s.high_risk_fraction == 0.01, || {
        format!("fraction {}", s.high_risk_fraction)
    })?;
    ensure(!s.low_risk, || "1% copies judged low risk".into())?;

    // Six identical real records form a class too large to count; five do not.
    let mut rows: Vec<Vec<String>> = (0..200)
        .map(|r| {
            real.row_text(r)
                .into_iter()
                .map(Option::unwrap_or_default)
                .collect()
        })
        .collect();
    for r in 1..6 {
        rows[r] = rows[0].clone();
    }
    for r in 11..15 {
        rows[r] = rows[10].clone();
    }
    let dup = Dataset::from_records(real.schema().clone(), rows.clone()).unwrap();
    let syn_small = replace_rows(
        &spec.sample(200, 34).map_err(fmt_err)?,
        &dup,
        &[(0, 0), (1, 10)],
    );
    let s6 = dcr_summary(&dup, &syn_small, &[], &cfg).map_err(fmt_err)?;
    ensure(s6.zero_dcr_records == 11, || {
        format!("zero-DCR records {}", s6.zero_dcr_records)
    })?;
    ensure(s6.high_risk_records == vec![10, 11, 12, 13, 14], || {
        format!("R_HR {:?}", s6.high_risk_records)
    })?;
    Ok(format!(
        "20 copies in 2000 give fraction {} (FAIL); class of 6 exempt, class of 5 counted",
        s.high_risk_fraction
    ))
}

// ---------------------------------------------------------------- null calibration

fn null_calibration() -> Check {
    let start = Instant::now();
    let spec = SimSpec::default();
    let cfg = DistanceConfig::default();
    let mut low_risk = 0;
    let mut rows = Vec::new();
    for seed in 0..20u64 {
        let base = 1000 + seed * 10;
        let r1 = spec.sample(2000, base).map_err(fmt_err)?;
        let r2 = spec.sample(2000, base + 1).map_err(fmt_err)?;
        let s1 = spec.sample(2000, base + 2).map_err(fmt_err)?;
        let s2 = spec.sample(2000, base + 3).map_err(fmt_err)?;
        let real = r1.concat(&r2).map_err(fmt_err)?;
        let syn = s1.concat(&s2).map_err(fmt_err)?;
        let disc = discriminator_metrics(&real, &syn, ModelFamily::Logistic, 5, 1, seed)
            .map_err(fmt_err)?;
        let mi = membership_inference_grid(&r1, &r2, &s1, &DEFAULT_ATTACKER_FRACTIONS, seed, &cfg)
            .map_err(fmt_err)?;
        let mi_score = mi.iter().map(|c| c.mi_risk_score).fold(0.0, f64::max);
        let trial = file_membership_trial(&r1, &r2, &s1, &s2, &cfg, seed).map_err(fmt_err)?;
        let h = file_membership_htest(&[trial.correct_fraction], &[trial.decisions], 0.05)
            .map_err(fmt_err)?;
        low_risk += usize::from(h.low_risk);
        rows.push((seed, disc.disc_auc.mean, disc.pmse.mean, mi_score, h.p_hat));
    }
    let elapsed = start.elapsed();
    let mut failures = Vec::new();
    for &(seed, auc, pmse, mi, p_hat) in &rows {
        if (auc - 0.5).abs() > 0.05 {
            failures.push(format!("seed {seed}: auc {auc:.4}"));
        }
        if pmse > 0.005 {
            failures.push(format!("seed {seed}: pmse {pmse:.5}"));
        }
        if mi > 0.1 {
            failures.push(format!("seed {seed}: mi {mi:.4}"));
        }
        if (p_hat - 0.5).abs() > 0.05 {
            failures.push(format!("seed {seed}: p_hat {p_hat:.4}"));
        }
    }
    if low_risk < 18 {
        failures.push(format!("htest low risk in {low_risk}/20"));
    }
    if elapsed > Duration::from_secs(300) {
        failures.push(format!("took {elapsed:?}"));
    }
    let max =
        |f: fn(&(u64, f64, f64, f64, f64)) -> f64| rows.iter().map(f).fold(f64::MIN, f64::max);
    let summary = format!(
        "20 seeds in {:.1}s: max |auc-0.5| {:.4}, max pmse {:.5}, max mi {:.4}, max |p_hat-0.5| {:.4}, low risk {low_risk}/20",
        elapsed.as_secs_f64(),
        max(|r| (r.1 - 0.5).abs()),
        max(|r| r.2),
        max(|r| r.3),
        max(|r| (r.4 - 0.5).abs()),
    );
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", failures.join(", ")))
    }
}

// ---------------------------------------------------------------- leak detection

fn shuffled(ds: &Dataset, seed: u64) -> Dataset {
    let mut idx: Vec<usize> = (0..ds.row_count()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ds.select_rows(&idx)
}

fn minimal_config(extra: &str) -> AuditConfig {
    AuditConfig::from_toml_str(&format!(
        "seed = 41\n[data]\nschema = \"unused\"\nreal = \"unused\"\nsynthetic = \"unused\"\n{extra}"
    ))
    .unwrap()
}

fn leak_detection() -> Check {
    let spec = wide();
    let r1 = spec.sample(2000, 41).map_err(fmt_err)?;
    let r2 = spec.sample(2000, 42).map_err(fmt_err)?;
    let s1 = shuffled(&r1, 43);
    let s2 = shuffled(&r2, 44);
    let cfg = minimal_config("[fidelity]\nenabled = false\n[privacy.attribute]\nenabled = false\n");
    let inputs = AuditInputs {
        schema: r1.schema().clone(),
        real: r1,
        synthetic: s1,
        holdout: Some(r2),
        holdout_synthetic: Some(s2),
    };
    let report = run_audit_on(&cfg, &inputs);
    let privacy = report.privacy.ok().ok_or("privacy block failed")?;
    let mi = privacy.membership.ok().ok_or("membership block failed")?;
    for c in mi {
        ensure(c.rows[0].precision == Some(1.0), || {
            format!(
                "fraction {}: precision {:?}",
                c.attacker_fraction, c.rows[0].precision
            )
        })?;
        ensure(c.mi_risk_score == 1.0, || {
            format!(
                "fraction {}: score {}",
                c.attacker_fraction, c.mi_risk_score
            )
        })?;
    }
    let fm = privacy
        .file_membership
        .ok()
        .ok_or("file membership block failed")?;
    ensure(fm.trial.correct_fraction == 1.0, || {
        format!("correct fraction {}", fm.trial.correct_fraction)
    })?;
    let dcr = privacy.dcr.ok().ok_or("dcr block failed")?;
    ensure(dcr.min_dcr == 0.0, || format!("min dcr {}", dcr.min_dcr))?;
    for m in [
        "mi_risk_score",
        "file_membership_p_value",
        "dcr_high_risk_fraction",
    ] {
        ensure(verdict_outcome(&report, m) == Outcome::Fail, || {
            format!("{m} not FAIL")
        })?;
    }
    Ok("precision 1, score 1, file membership 1, min DCR 0; three FAIL verdicts".into())
}

// ---------------------------------------------------------------- TSTR

fn tstr_sanity() -> Check {
    let spec = SimSpec {
        target: true,
        ..SimSpec::default()
    };
    let predictors = spec.predictors();
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let real = spec.sample(4000, 50 + seed).map_err(fmt_err)?;
        let (train, _) = tstr_split(&real, "y", tstr_repeat_seed(seed, 0)).map_err(fmt_err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(60 + seed);
        let boot: Vec<usize> = (0..train.len())
            .map(|_| train[rng.random_range(0..train.len())])
            .collect();
        let syn = real.select_rows(&boot);
        let t = tstr_compare(
            &real,
            &syn,
            "y",
            &predictors,
            ModelFamily::Logistic,
            seed,
            1,
        )
        .map_err(fmt_err)?;
        ensure((0.95..=1.05).contains(&t.ratio.mean), || {
            format!("seed {seed}: ratio {}", t.ratio.mean)
        })?;
        ensure(t.ndcg.mean >= 0.9, || {
            format!("seed {seed}: ndcg {}", t.ndcg.mean)
        })?;

        // Same rows with the labels permuted.
        let mut labels: Vec<String> = (0..syn.row_count())
            .map(|r| syn.row_text(r)[8].clone().unwrap_or_default())
            .collect();
        labels.shuffle(&mut rng);
        let rows: Vec<Vec<String>> = (0..syn.row_count())
            .map(|r| {
                let mut row: Vec<String> = syn
                    .row_text(r)
                    .into_iter()
                    .map(Option::unwrap_or_default)
                    .collect();
                row[8] = labels[r].clone();
                row
            })
            .collect();
        let noise = Dataset::from_records(syn.schema().clone(), rows).map_err(fmt_err)?;
        let u = tstr_compare(
            &real,
            &noise,
            "y",
            &predictors,
            ModelFamily::Logistic,
            seed,
            1,
        )
        .map_err(fmt_err)?;
        ensure((u.auc_syn.mean - 0.5).abs() <= 0.05, || {
            format!("seed {seed}: shuffled auc {}", u.auc_syn.mean)
        })?;
        lines.push(format!(
            "{:.3}/{:.3}/{:.3}",
            t.ratio.mean, t.ndcg.mean, u.auc_syn.mean
        ));
    }
    Ok(format!(
        "ratio/ndcg/shuffled auc per seed: {}",
        lines.join(" ")
    ))
}

// ---------------------------------------------------------------- survival

fn survival() -> Check {
    let times = [6.0, 2.0, 1.0, 5.0, 9.0, 3.0, 2.0, 8.0, 4.0, 5.0];
    let events = [
        false, true, true, true, false, true, false, true, false, true,
    ];
    let c = kaplan_meier(&times, &events).map_err(fmt_err)?;
    // Event times 1, 2, 3, 5, 8 with at-risk 10, 9, 7, 5, 2 and deaths 1, 1, 1, 2, 1.
    let want = [
        9.0 / 10.0,
        8.0 / 10.0,
        24.0 / 35.0,
        72.0 / 175.0,
        36.0 / 175.0,
    ];
    ensure(c.times == vec![1.0, 2.0, 3.0, 5.0, 8.0], || {
        format!("times {:?}", c.times)
    })?;
    ensure(c.at_risk == vec![10, 9, 7, 5, 2], || {
        format!("at risk {:?}", c.at_risk)
    })?;
    ensure(c.events == vec![1, 1, 1, 2, 1], || {
        format!("events {:?}", c.events)
    })?;
    for (g, w) in c.survival.iter().zip(want) {
        ensure((g - w).abs() <= 1e-15, || {
            format!("survival {:?}", c.survival)
        })?;
    }
    let same = log_rank(&times, &events, &times, &events).map_err(fmt_err)?;
    ensure(same.p_value == 1.0, || {
        format!("identical groups p {}", same.p_value)
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let draw = |rate: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let e = Exp::new(rate).unwrap();
        (0..200).map(|_| e.sample(rng)).collect()
    };
    let a = draw(1.0, &mut rng);
    let b = draw(5.0, &mut rng);
    let all = vec![true; 200];
    let diff = log_rank(&a, &all, &b, &all).map_err(fmt_err)?;
    ensure(diff.p_value < 0.001, || {
        format!("rate 1 vs 5 p {}", diff.p_value)
    })?;
    Ok(format!(
        "product-limit exact, identical p = 1, rate 1 vs 5 p = {:.2e}",
        diff.p_value
    ))
}

// ---------------------------------------------------------------- exposure

/// In-process generator that emits its training data and scores records by
/// whether it saw them.
struct Memorizer {
    seen: std::cell::RefCell<std::collections::HashSet<String>>,
}

impl GeneratorAdapter for Memorizer {
    fn train(&self, input: &Path, output: &Path, _seed: u64) -> synthaudit_core::Result<()> {
        let text = std::fs::read_to_string(input).unwrap();
        *self.seen.borrow_mut() = text.lines().skip(1).map(str::to_string).collect();
        std::fs::write(output, text).unwrap();
        Ok(())
    }

    fn score(&self, input: &Path) -> synthaudit_core::Result<Vec<f64>> {
        let text = std::fs::read_to_string(input).unwrap();
        let seen = self.seen.borrow();
        Ok(text
            .lines()
            .skip(1)
            .map(|l| if seen.contains(l) { 0.0 } else { 10.0 })
            .collect())
    }
}

fn exposure_checks() -> Check {
    let size = 1u64 << 16;
    let top = exposure(1, size).map_err(fmt_err)?;
    ensure(top == 16.0, || format!("exposure(1, 2^16) = {top}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let mut e: Vec<f64> = (0..100_000)
        .map(|_| exposure(rng.random_range(1..=size), size).unwrap())
        .collect();
    e.sort_by(f64::total_cmp);
    let median = (e[49_999] + e[50_000]) / 2.0;
    ensure((median - 1.0).abs() <= 0.05, || format!("median {median}"))?;

    let real = wide().sample(300, 81).map_err(fmt_err)?;
    let space = CanarySpace {
        template: (0..8)
            .map(|i| (format!("c{i}"), "L0".to_string()))
            .collect(),
        slots: vec![
            CanarySlot {
                column: "n0".into(),
                values: (0..16).map(|v| format!("{}", 100 + v)).collect(),
            },
            CanarySlot {
                column: "n1".into(),
                values: (0..16).map(|v| format!("{}", 200 + v)).collect(),
            },
        ],
    };
    let dir = tempfile::tempdir().map_err(fmt_err)?;
    let adapter = Memorizer {
        seen: Default::default(),
    };
    let c = canary_campaign(&real, &adapter, 5, &space, 82, dir.path()).map_err(fmt_err)?;
    ensure(c.ranks.iter().all(|&r| r == 1), || {
        format!("ranks {:?}", c.ranks)
    })?;
    ensure(!c.low_risk && c.mean_exposure == 8.0, || {
        format!("campaign {c:?}")
    })?;
    Ok(format!(
        "top rank 16 bits, median {median:.4}, memorizer exposure {} of {}",
        c.mean_exposure, c.threshold
    ))
}

// ---------------------------------------------------------------- rules

fn rule_schema() -> Schema {
    let mut sex = ColumnSpec::categorical("sex");
    sex.quasi_identifier = true;
    Schema::new(vec![
        ColumnSpec::numeric("age"),
        sex,
        ColumnSpec::categorical("pregnant"),
        ColumnSpec::categorical("diagnosis"),
        ColumnSpec::numeric("weight"),
        ColumnSpec::numeric("death_time"),
        ColumnSpec::numeric("last_visit"),
        ColumnSpec::numeric("died"),
        ColumnSpec::categorical("blood type"),
    ])
    .unwrap()
}

enum Expect {
    Canonical(&'static str),
    Syntax(usize),
    Unknown(usize),
    Type(usize),
}

fn rule_parser() -> Check {
    use Expect::*;
    let schema = rule_schema();
    let golden: Vec<(&str, Expect)> = vec![
        ("age > 3", Canonical("age > 3")),
        ("age>=3.5", Canonical("age >= 3.5")),
        ("age != -2", Canonical("age != -2")),
        ("weight < 1e2", Canonical("weight < 100")),
        ("sex == \"M\"", Canonical("sex == \"M\"")),
        ("sex != 'F'", Canonical("sex != \"F\"")),
        (
            "last_visit > death_time",
            Canonical("last_visit > death_time"),
        ),
        ("sex == pregnant", Canonical("sex == pregnant")),
        (
            "`blood type` == \"AB\"",
            Canonical("`blood type` == \"AB\""),
        ),
        ("is_missing(weight)", Canonical("is_missing(weight)")),
        (
            "NOT is_missing(`blood type`)",
            Canonical("not is_missing(`blood type`)"),
        ),
        ("a1", Unknown(0)),
        (
            "age > 1 and age < 5 or sex == \"F\"",
            Canonical("((age > 1 and age < 5) or sex == \"F\")"),
        ),
        (
            "age > 1 or age < 5 and sex == \"F\"",
            Canonical("(age > 1 or (age < 5 and sex == \"F\"))"),
        ),
        (
            "(age > 1 or age < 5) and sex == \"F\"",
            Canonical("((age > 1 or age < 5) and sex == \"F\")"),
        ),
        ("not not age > 1", Canonical("not not age > 1")),
        (
            "died == 1 AND last_visit > death_time",
            Canonical("(died == 1 and last_visit > death_time)"),
        ),
        ("age >", Syntax(5)),
        ("age >> 3", Syntax(5)),
        ("(age > 3", Syntax(8)),
        ("age > 3)", Syntax(7)),
        ("age > 3 and", Syntax(11)),
        ("", Syntax(0)),
        ("sex == \"M", Syntax(9)),
        ("age 3", Syntax(4)),
        ("is_missing(age", Syntax(14)),
        ("height > 3", Unknown(0)),
        ("age > 3 and sex == `colour`", Unknown(19)),
        ("sex > \"M\"", Type(4)),
        ("age == \"old\"", Type(7)),
        ("sex == 3", Type(7)),
        ("age < sex", Type(6)),
    ];
    let mut mismatches = Vec::new();
    for (text, want) in &golden {
        let got = parse_expression(text, &schema);
        let ok = match (want, &got) {
            (Canonical(c), Ok(e)) => e.to_string() == *c,
            (Syntax(p), Err(RuleError::Syntax { position, .. })) => position == p,
            (Unknown(p), Err(RuleError::UnknownColumn { position, .. })) => position == p,
            (Type(p), Err(RuleError::TypeMismatch { position, .. })) => position == p,
            _ => false,
        };
        if !ok {
            mismatches.push(format!(
                "{text:?} -> {}",
                got.map_or_else(|e| format!("{e:?}"), |e| e.to_string())
            ));
        }
    }
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;

    // The four example rules on crafted records; each row breaks the rule
    // on its own line only where marked.
    let rules = [
        ("male_pregnant", "sex == \"M\" and pregnant == \"Y\""),
        (
            "female_prostate",
            "sex == \"F\" and diagnosis == \"prostate_cancer\"",
        ),
        ("infant_adult_weight", "age <= 3 and weight > 100"),
        ("visit_after_death", "died == 1 and last_visit > death_time"),
    ];
    let records: Vec<([&str; 9], [bool; 4])> = vec![
        (
            ["30", "M", "Y", "none", "80", "", "10", "0", ""],
            [true, false, false, false],
        ),
        (
            ["30", "M", "N", "none", "80", "", "10", "0", ""],
            [false, false, false, false],
        ),
        (
            ["30", "F", "Y", "none", "60", "", "10", "0", ""],
            [false, false, false, false],
        ),
        (
            ["60", "F", "N", "prostate_cancer", "60", "", "10", "0", ""],
            [false, true, false, false],
        ),
        (
            ["60", "M", "N", "prostate_cancer", "90", "", "10", "0", ""],
            [false, false, false, false],
        ),
        (
            ["2", "F", "N", "none", "120", "", "1", "0", ""],
            [false, false, true, false],
        ),
        (
            ["3", "F", "N", "none", "100", "", "1", "0", ""],
            [false, false, false, false],
        ),
        (
            ["4", "M", "N", "none", "120", "", "1", "0", ""],
            [false, false, false, false],
        ),
        (
            ["", "M", "N", "none", "120", "", "1", "0", ""],
            [false, false, false, false],
        ),
        (
            ["70", "M", "N", "none", "80", "12", "15", "1", ""],
            [false, false, false, true],
        ),
        (
            ["70", "M", "N", "none", "80", "12", "12", "1", ""],
            [false, false, false, false],
        ),
        (
            ["70", "M", "N", "none", "80", "12", "15", "0", ""],
            [false, false, false, false],
        ),
        (
            ["70", "M", "N", "none", "80", "", "15", "1", ""],
            [false, false, false, false],
        ),
        (
            ["", "", "Y", "prostate_cancer", "", "", "", "", ""],
            [false, false, false, false],
        ),
    ];
    let ds = Dataset::from_records(schema.clone(), records.iter().map(|r| r.0.to_vec()))
        .map_err(fmt_err)?;
    for (k, (name, text)) in rules.iter().enumerate() {
        let rule = parse_rule(name, text, &schema).map_err(fmt_err)?;
        let got = evaluate_rule(&rule, &ds).map_err(fmt_err)?;
        let want: Vec<bool> = records.iter().map(|r| r.1[k]).collect();
        ensure(got == want, || format!("{name}: {got:?}"))?;
    }
    Ok(format!(
        "{} golden expressions, 4 example rules on {} records",
        golden.len(),
        records.len()
    ))
}

// ---------------------------------------------------------------- determinism

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/tests/fixtures")
}

fn determinism() -> Check {
    let cfg = AuditConfig::from_file(&fixture_dir().join("audit.toml")).map_err(fmt_err)?;
    let inputs = AuditInputs::load(&cfg).map_err(fmt_err)?;
    let run = |threads: usize| -> String {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| run_audit_on(&cfg, &inputs).to_json().unwrap())
    };
    let first = run(1);
    let golden =
        std::fs::read_to_string(fixture_dir().join("golden_report.json")).map_err(fmt_err)?;
    ensure(first == golden, || {
        "report differs from the golden file".into()
    })?;
    for threads in [1, 2, 4, 8] {
        ensure(run(threads) == first, || {
            format!("{threads} threads differ")
        })?;
    }
    Ok(format!(
        "{} bytes identical across 5 runs and 1/2/4/8 threads",
        first.len()
    ))
}

// ---------------------------------------------------------------- performance

fn performance() -> Check {
    let spec = SimSpec {
        numeric: 15,
        categorical: 15,
        levels: 6,
        missing_rate: 0.02,
        target: false,
    };
    let real = spec.sample(100_000, 91).map_err(fmt_err)?;
    let syn = spec.sample(100_000, 92).map_err(fmt_err)?;
    let space =
        DistanceSpace::fit(&DistanceConfig::hamming(10), &real, &[&syn]).map_err(fmt_err)?;
    let r = space.encode(&real).map_err(fmt_err)?;
    let s = space.encode(&syn).map_err(fmt_err)?;
    ensure(r.width() == 30, || format!("width {}", r.width()))?;

    let sub: Vec<usize> = (0..2000).collect();
    let (rs, ss) = (r.select_rows(&sub), s.select_rows(&sub));
    let par = all_nearest(&ss, &rs, false, None).map_err(fmt_err)?;
    let seq = all_nearest_sequential(&ss, &rs, false).map_err(fmt_err)?;
    ensure(par == seq, || {
        "parallel and sequential results differ on 2000 x 2000".into()
    })?;
    let par_self = all_nearest(&rs, &rs, true, None).map_err(fmt_err)?;
    let seq_self = all_nearest_sequential(&rs, &rs, true).map_err(fmt_err)?;
    ensure(par_self == seq_self, || {
        "self-mode results differ on 2000 x 2000".into()
    })?;

    let start = Instant::now();
    let out = all_nearest(&s, &r, false, None).map_err(fmt_err)?;
    let elapsed = start.elapsed();
    ensure(out.len() == 100_000, || format!("{} results", out.len()))?;
    ensure(elapsed <= Duration::from_secs(600), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "100000 x 100000 x 30 in {:.1}s on {} threads; 2000 x 2000 equals sequential",
        elapsed.as_secs_f64(),
        rayon::current_num_threads()
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [Criterion; 14] = [
        ("distance oracle", gower_oracle),
        ("metric identity suite", identity_suite),
        ("ks oracle", ks_oracle),
        ("lambda prime formula", lambda_formula),
        ("attribute risk oracle", attribute_oracle),
        ("dcr copy detection", dcr_copy_detection),
        ("null calibration", null_calibration),
        ("leak detection", leak_detection),
        ("tstr sanity", tstr_sanity),
        ("survival", survival),
        ("exposure", exposure_checks),
        ("rule parser", rule_parser),
        ("determinism", determinism),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
