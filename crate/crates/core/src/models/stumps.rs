use serde::{Deserialize, Serialize};

use crate::models::encoder::FeatureMatrix;
use crate::models::logistic::sigmoid;

const LEAF_REG: f64 = 1.0;
const MIN_CHILD_HESSIAN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StumpLoss {
    Logistic,
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
    pub gain: f64,
}

impl Stump {
    fn predict(&self, row: &[f64]) -> f64 {
        if row[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

/// Additive ensemble of depth-1 trees fitted with Newton steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpEnsemble {
    pub loss: StumpLoss,
    pub base: f64,
    pub learning_rate: f64,
    pub stumps: Vec<Stump>,
}

impl StumpEnsemble {
    /// Raw additive score (log-odds for the logistic loss).
    pub fn raw(&self, row: &[f64]) -> f64 {
        self.base + self.stumps.iter().map(|s| s.predict(row)).sum::<f64>()
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.rows)
            .map(|i| {
                let r = self.raw(x.row(i));
                match self.loss {
                    StumpLoss::Logistic => sigmoid(r),
                    StumpLoss::Squared => r,
                }
            })
            .collect()
    }

    /// Predictions after each of the given numbers of rounds.
    pub fn staged_predict(&self, x: &FeatureMatrix, checkpoints: &[usize]) -> Vec<Vec<f64>> {
        let mut raw = vec![self.base; x.rows];
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut done = 0;
        for &cp in checkpoints {
            for s in &self.stumps[done..cp.min(self.stumps.len())] {
                for (i, r) in raw.iter_mut().enumerate() {
                    *r += s.predict(x.row(i));
                }
            }
            done = done.max(cp.min(self.stumps.len()));
            out.push(match self.loss {
                StumpLoss::Logistic => raw.iter().map(|&r| sigmoid(r)).collect(),
                StumpLoss::Squared => raw.clone(),
            });
        }
        out
    }

    /// Total gain per feature.
    pub fn gains(&self, width: usize) -> Vec<f64> {
        let mut g = vec![0.0; width];
        for s in &self.stumps {
            g[s.feature] += s.gain;
        }
        g
    }
}

fn best_split(
    col: &[f64],
    order: &[usize],
    grad: &[f64],
    hess: &[f64],
    gt: f64,
    ht: f64,
) -> Option<(f64, f64, f64, f64)> {
    let parent = gt * gt / (ht + LEAF_REG);
    let (mut gl, mut hl) = (0.0, 0.0);
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for k in 0..order.len() - 1 {
        let i = order[k];
        gl += grad[i];
        hl += hess[i];
        let (a, b) = (col[i], col[order[k + 1]]);
        if a == b {
            continue;
        }
        let (gr, hr) = (gt - gl, ht - hl);
        if hl < MIN_CHILD_HESSIAN || hr < MIN_CHILD_HESSIAN {
            continue;
        }
        let gain = 0.5 * (gl * gl / (hl + LEAF_REG) + gr * gr / (hr + LEAF_REG) - parent);
        if best.is_none_or(|b| gain > b.0) {
            best = Some((
                gain,
                (a + b) / 2.0,
                -gl / (hl + LEAF_REG),
                -gr / (hr + LEAF_REG),
            ));
        }
    }
    best
}

/// Fits `rounds` stumps; ties between features go to the lowest index.
pub fn fit_stumps(
    x: &FeatureMatrix,
    targets: &[f64],
    loss: StumpLoss,
    rounds: usize,
    learning_rate: f64,
) -> StumpEnsemble {
    let n = x.rows;
    let p = x.width();
    let columns: Vec<Vec<f64>> = (0..p)
        .map(|f| (0..n).map(|i| x.row(i)[f]).collect())
        .collect();
    let orders: Vec<Vec<usize>> = columns
        .iter()
        .map(|c| {
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by(|&a, &b| c[a].total_cmp(&c[b]).then(a.cmp(&b)));
            o
        })
        .collect();
    let mean = targets.iter().sum::<f64>() / n as f64;
    let base = match loss {
        StumpLoss::Logistic => {
            let m = mean.clamp(1e-6, 1.0 - 1e-6);
            (m / (1.0 - m)).ln()
        }
        StumpLoss::Squared => mean,
    };
    let mut raw = vec![base; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![1.0; n];
    let mut stumps = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        for i in 0..n {
            match loss {
                StumpLoss::Logistic => {
                    let pr = sigmoid(raw[i]);
                    grad[i] = pr - targets[i];
                    hess[i] = (pr * (1.0 - pr)).max(1e-12);
                }
                StumpLoss::Squared => grad[i] = raw[i] - targets[i],
            }
        }
        let gt: f64 = grad.iter().sum();
        let ht: f64 = hess.iter().sum();
        let mut best: Option<(usize, (f64, f64, f64, f64))> = None;
        for f in 0..p {
            if let Some(s) = best_split(&columns[f], &orders[f], &grad, &hess, gt, ht) {
                if best.is_none_or(|b| s.0 > b.1 .0) {
                    best = Some((f, s));
                }
            }
        }
        let Some((feature, (gain, threshold, left, right))) = best else {
            break;
        };
        if gain <= 0.0 {
            break;
        }
        let stump = Stump {
            feature,
            threshold,
            left: left * learning_rate,
            right: right * learning_rate,
            gain,
        };
        for (i, r) in raw.iter_mut().enumerate() {
            *r += stump.predict(x.row(i));
        }
        stumps.push(stump);
    }
    StumpEnsemble {
        loss,
        base,
        learning_rate,
        stumps,
    }
}
