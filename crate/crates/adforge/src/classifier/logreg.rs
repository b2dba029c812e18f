//! L2-regularized logistic regression trained by seeded mini-batch gradient
//! descent.
//!
//! The objective is the mean log-loss plus `l2/2 * ||w||^2` (the bias is not
//! penalized). After every epoch the full-batch objective is recomputed; an
//! epoch that would raise it is rolled back and retried with half the step
//! size, so the recorded per-epoch objective never increases.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::text::FeatureVector;

const MAX_HALVINGS: u32 = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            epochs: 30,
            l2: 1e-4,
            seed: 0,
            batch_size: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogRegParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn logit(&self, x: &FeatureVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn probability(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.logit(x))
    }
}

/// A training row: features and a 0/1 target.
pub type Row = (FeatureVector, f64);

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Full-batch regularized objective.
pub fn objective(params: &LogRegParams, rows: &[Row], l2: f64) -> f64 {
    let n = rows.len().max(1) as f64;
    let data: f64 = rows
        .iter()
        .map(|(x, y)| {
            let z = params.logit(x);
            softplus(z) - y * z
        })
        .sum::<f64>()
        / n;
    let reg = 0.5 * l2 * params.weights.iter().map(|w| w * w).sum::<f64>();
    data + reg
}

/// Analytic gradient of [`objective`] over `rows`.
pub fn gradient(params: &LogRegParams, rows: &[Row], l2: f64) -> LogRegParams {
    let n = rows.len().max(1) as f64;
    let mut g = LogRegParams {
        weights: params.weights.iter().map(|w| l2 * w).collect(),
        bias: 0.0,
    };
    for (x, y) in rows {
        let r = (params.probability(x) - y) / n;
        for (i, v) in x.iter() {
            g.weights[i] += r * v;
        }
        g.bias += r;
    }
    g
}

/// How examples are presented during training.
#[derive(Debug, Clone, PartialEq)]
pub enum EpochOrder {
    /// Every epoch is a fresh seeded shuffle.
    Shuffled,
    /// The first epoch walks `order` (easy to hard). Only the easiest
    /// `ceil(easiest_fraction * n)` positions keep their order; the tail is
    /// shuffled. Later epochs are shuffled.
    Curriculum {
        order: Vec<usize>,
        easiest_fraction: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    /// Objective before training followed by one entry per epoch.
    pub epoch_objective: Vec<f64>,
    /// Row indices in the order the first epoch consumed them.
    pub first_epoch_order: Vec<usize>,
    pub step_halvings: u32,
}

impl TrainingTrace {
    pub fn final_objective(&self) -> f64 {
        *self.epoch_objective.last().unwrap_or(&f64::NAN)
    }
}

fn epoch_permutation(n: usize, seed: u64, epoch: usize, order: &EpochOrder) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    match order {
        EpochOrder::Curriculum {
            order,
            easiest_fraction,
        } if epoch == 0 => {
            let head = ((easiest_fraction.clamp(0.0, 1.0) * n as f64).ceil() as usize).min(n);
            let mut perm = order.clone();
            perm[head..].shuffle(&mut rng);
            perm
        }
        _ => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            perm
        }
    }
}

fn run_epoch(params: &mut LogRegParams, rows: &[Row], perm: &[usize], lr: f64, config: &LogRegConfig) {
    for chunk in perm.chunks(config.batch_size.max(1)) {
        let m = chunk.len() as f64;
        let mut g_bias = 0.0;
        let mut sparse: Vec<(usize, f64)> = Vec::new();
        for &i in chunk {
            let (x, y) = &rows[i];
            let r = (params.probability(x) - y) / m;
            g_bias += r;
            sparse.extend(x.iter().map(|(j, v)| (j, r * v)));
        }
        let shrink = 1.0 - lr * config.l2;
        for w in params.weights.iter_mut() {
            *w *= shrink;
        }
        for (j, g) in sparse {
            params.weights[j] -= lr * g;
        }
        params.bias -= lr * g_bias;
    }
}

/// Fits parameters over `rows` with `dim` features.
pub fn fit(rows: &[Row], dim: usize, config: &LogRegConfig, order: &EpochOrder) -> (LogRegParams, TrainingTrace) {
    let mut params = LogRegParams::zeros(dim);
    let mut trace = TrainingTrace::default();
    let mut current = objective(&params, rows, config.l2);
    trace.epoch_objective.push(current);
    let mut lr = config.learning_rate;

    for epoch in 0..config.epochs {
        let perm = epoch_permutation(rows.len(), config.seed, epoch, order);
        if epoch == 0 {
            trace.first_epoch_order = perm.clone();
        }
        let mut halvings = 0;
        loop {
            let mut candidate = params.clone();
            run_epoch(&mut candidate, rows, &perm, lr, config);
            let value = objective(&candidate, rows, config.l2);
            if value.is_finite() && value <= current {
                params = candidate;
                current = value;
                break;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                // Step size has collapsed; keep the previous parameters.
                break;
            }
            lr *= 0.5;
        }
        trace.step_halvings += halvings.min(MAX_HALVINGS);
        trace.epoch_objective.push(current);
    }
    (params, trace)
}
