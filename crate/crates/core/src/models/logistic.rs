use serde::{Deserialize, Serialize};

use crate::models::encoder::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LogisticModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.rows)
            .map(|i| sigmoid(self.decision(x.row(i))))
            .collect()
    }
}

/// Mean log-loss plus `lambda/2 · |w|²` and its gradient; the last gradient
/// entry is the (unpenalized) bias.
pub(crate) fn loss_and_gradient(
    x: &FeatureMatrix,
    y: &[f64],
    w: &[f64],
    b: f64,
    lambda: f64,
) -> (f64, Vec<f64>) {
    let n = x.rows as f64;
    let p = x.width();
    let mut grad = vec![0.0; p + 1];
    let mut loss = 0.0;
    for (i, &yi) in y.iter().enumerate().take(x.rows) {
        let row = x.row(i);
        let z = dot(w, row) + b;
        // log(1 + e^z) - y z, computed stably
        loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - yi * z;
        let r = sigmoid(z) - yi;
        for (g, v) in grad.iter_mut().zip(row) {
            *g += r * v;
        }
        grad[p] += r;
    }
    for g in &mut grad {
        *g /= n;
    }
    for k in 0..p {
        grad[k] += lambda * w[k];
    }
    loss = loss / n + 0.5 * lambda * dot(w, w);
    (loss, grad)
}

/// Largest eigenvalue of `XᵀX / n` with an appended intercept column.
fn gram_spectral_bound(x: &FeatureMatrix) -> f64 {
    let p = x.width();
    let n = x.rows as f64;
    let mut v = vec![1.0 / ((p + 1) as f64).sqrt(); p + 1];
    let mut eig = 0.0;
    for _ in 0..50 {
        let mut out = vec![0.0; p + 1];
        for i in 0..x.rows {
            let row = x.row(i);
            let s = dot(&v[..p], row) + v[p];
            for (o, r) in out.iter_mut().zip(row) {
                *o += s * r;
            }
            out[p] += s;
        }
        for o in &mut out {
            *o /= n;
        }
        let norm = dot(&out, &out).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        eig = norm;
        v = out.into_iter().map(|o| o / norm).collect();
    }
    eig
}

/// Nesterov-accelerated full-batch gradient descent with step `1/L` for a
/// fixed number of iterations. Zero iterations give the intercept-only model.
pub fn fit_logistic(
    x: &FeatureMatrix,
    labels: &[bool],
    lambda: f64,
    iterations: usize,
) -> LogisticModel {
    let p = x.width();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let lip = gram_spectral_bound(x) * 1.05 / 4.0 + lambda;
    let step = if lip > 0.0 { 1.0 / lip } else { 1.0 };
    let mut theta = vec![0.0; p + 1];
    // Start from the intercept-only fit.
    let mean = y.iter().sum::<f64>() / y.len().max(1) as f64;
    let m = mean.clamp(1e-6, 1.0 - 1e-6);
    theta[p] = (m / (1.0 - m)).ln();
    let mut prev = theta.clone();
    let mut look = theta.clone();
    let mut t: f64 = 1.0;
    for _ in 0..iterations {
        let (_, g) = loss_and_gradient(x, &y, &look[..p], look[p], lambda);
        prev.clone_from(&theta);
        for k in 0..=p {
            theta[k] = look[k] - step * g[k];
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let mom = (t - 1.0) / t_next;
        for k in 0..=p {
            look[k] = theta[k] + mom * (theta[k] - prev[k]);
        }
        t = t_next;
    }
    LogisticModel {
        bias: theta[p],
        weights: theta[..p].to_vec(),
        lambda,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> FeatureMatrix {
        FeatureMatrix {
            rows,
            names: (0..cols).map(|c| format!("f{c}")).collect(),
            parents: (0..cols).map(|c| format!("f{c}")).collect(),
            values,
        }
    }

    #[test]
    fn separable_data_is_ranked_perfectly() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 10.0 - 2.0).collect();
        let labels: Vec<bool> = xs.iter().map(|&v| v > 0.05).collect();
        let x = matrix(40, 1, xs);
        let m = fit_logistic(&x, &labels, 1e-4, 300);
        let p = m.predict_proba(&x);
        assert!(crate::models::roc_auc(&p, &labels).unwrap() >= 0.99);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn reaches_stationary_point() {
        let vals: Vec<f64> = (0..60)
            .map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0)
            .collect();
        let labels: Vec<bool> = (0..30).map(|i| (i * 7) % 3 == 0).collect();
        let x = matrix(30, 2, vals);
        let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
        let m = fit_logistic(&x, &labels, 0.1, 500);
        let (_, g) = loss_and_gradient(&x, &y, &m.weights, m.bias, 0.1);
        assert!(g.iter().all(|v| v.abs() < 1e-8), "{g:?}");
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            vals in prop::collection::vec(-2.0f64..2.0, 24),
            w in prop::collection::vec(-1.0f64..1.0, 3),
            b in -1.0f64..1.0,
            bits in prop::collection::vec(any::<bool>(), 8),
            lambda in 0.0f64..1.0,
        ) {
            let x = matrix(8, 3, vals);
            let y: Vec<f64> = bits.iter().map(|&l| f64::from(u8::from(l))).collect();
            let (_, g) = loss_and_gradient(&x, &y, &w, b, lambda);
            let h = 1e-6;
            for k in 0..=3 {
                let (mut wp, mut wm, mut bp, mut bm) = (w.clone(), w.clone(), b, b);
                if k < 3 { wp[k] += h; wm[k] -= h; } else { bp += h; bm -= h; }
                let fd = (loss_and_gradient(&x, &y, &wp, bp, lambda).0
                    - loss_and_gradient(&x, &y, &wm, bm, lambda).0) / (2.0 * h);
                prop_assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1e-2), "{} vs {}", fd, g[k]);
            }
        }
    }
}
