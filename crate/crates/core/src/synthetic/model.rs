//! Linear classifier `sgn(wᵀx + b)` trained by minibatch RMSProp on the
//! logistic (cross-entropy) loss, with an optional quadratic penalty on the
//! first weight.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mixture::{Example, Sign};
use crate::aeg::Classifier;
use crate::error::{Error, Result};
use crate::seed::rng_from;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    pub fn weight_norm(&self) -> f64 {
        dot(&self.w, &self.w).sqrt()
    }
}

impl Classifier<Vec<f64>> for LinearModel {
    type Label = Sign;

    fn predict(&self, x: &Vec<f64>) -> Sign {
        Sign::of(self.score(x))
    }
}

impl Classifier<[f64]> for LinearModel {
    type Label = Sign;

    fn predict(&self, x: &[f64]) -> Sign {
        Sign::of(self.score(x))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Coefficient of the `w_1²` penalty.
    pub penalty_coefficient: f64,
    pub seed: u64,
    /// Examples whose functional margin `y(wᵀx + b)` exceeds this value
    /// contribute no gradient. `None` keeps exact double-precision gradients.
    pub saturation_margin: Option<f64>,
}

/// Margin beyond which the logistic loss `ln(1 + e^{-m}) ≈ e^{-m}` drops
/// below single-precision resolution, `24 ln 2`.
pub const SINGLE_PRECISION_SATURATION: f64 = 24.0 * std::f64::consts::LN_2;

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 50_000,
            batch_size: 100,
            learning_rate: 0.01,
            penalty_coefficient: 0.0,
            seed: 0,
            saturation_margin: Some(SINGLE_PRECISION_SATURATION),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        if !(self.penalty_coefficient >= 0.0) {
            return Err(Error::invalid("penalty_coefficient", "must be non-negative"));
        }
        if let Some(m) = self.saturation_margin {
            if !(m > 0.0) {
                return Err(Error::invalid("saturation_margin", "must be positive"));
            }
        }
        Ok(())
    }
}

/// RMSProp settings not exposed in [`TrainConfig`].
const RMS_DECAY: f64 = 0.9;
const RMS_EPSILON: f64 = 1e-8;
const INIT_STD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub model: LinearModel,
    /// Mean cross-entropy plus penalty over the whole training set.
    pub penalized_loss: f64,
    pub train_accuracy: f64,
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean cross-entropy plus `penalty · w_1²`.
pub fn penalized_loss(model: &LinearModel, data: &[Example], penalty: f64) -> f64 {
    let ce = data
        .iter()
        .map(|e| softplus(-e.label.value() * model.score(&e.input)))
        .sum::<f64>()
        / data.len() as f64;
    ce + penalty * model.w[0] * model.w[0]
}

pub fn accuracy(model: &LinearModel, data: &[Example]) -> f64 {
    let correct = data
        .iter()
        .filter(|e| Sign::of(model.score(&e.input)) == e.label)
        .count();
    correct as f64 / data.len() as f64
}

/// Trains a linear model; initialization and minibatch order are seeded by
/// `cfg.seed`.
pub fn train(data: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let rng = &mut rng_from(cfg.seed, &[]);
    if data.is_empty() {
        return Err(Error::EmptySample);
    }
    let dim = data[0].input.len();
    let m = data.len();
    let flat: Vec<f64> = data.iter().flat_map(|e| e.input.iter().copied()).collect();
    let labels: Vec<f64> = data.iter().map(|e| e.label.value()).collect();

    let init = Normal::new(0.0, INIT_STD).expect("valid std");
    let mut w: Vec<f64> = (0..dim).map(|_| init.sample(rng)).collect();
    let mut b = 0.0;
    let mut acc_w = vec![0.0; dim];
    let mut acc_b = 0.0;
    let mut grad_w = vec![0.0; dim];

    let mut order: Vec<usize> = (0..m).collect();
    let mut cursor = m;
    let batch = cfg.batch_size.min(m);
    let saturation = cfg.saturation_margin.unwrap_or(f64::INFINITY);

    for step in 0..cfg.steps {
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for _ in 0..batch {
            if cursor == m {
                order.shuffle(rng);
                cursor = 0;
            }
            let i = order[cursor];
            cursor += 1;
            let x = &flat[i * dim..(i + 1) * dim];
            let y = labels[i];
            let margin = y * (dot(&w, x) + b);
            if margin > saturation {
                continue;
            }
            // d/ds ln(1 + e^{-y s}) = -y σ(-y s)
            let coef = -y * sigmoid(-margin);
            for (g, xi) in grad_w.iter_mut().zip(x) {
                *g += coef * xi;
            }
            grad_b += coef;
        }
        let scale = 1.0 / batch as f64;
        grad_w.iter_mut().for_each(|g| *g *= scale);
        grad_b *= scale;
        grad_w[0] += 2.0 * cfg.penalty_coefficient * w[0];

        for ((wi, ai), gi) in w.iter_mut().zip(acc_w.iter_mut()).zip(&grad_w) {
            *ai = RMS_DECAY * *ai + (1.0 - RMS_DECAY) * gi * gi;
            *wi -= cfg.learning_rate * gi / (ai.sqrt() + RMS_EPSILON);
        }
        acc_b = RMS_DECAY * acc_b + (1.0 - RMS_DECAY) * grad_b * grad_b;
        b -= cfg.learning_rate * grad_b / (acc_b.sqrt() + RMS_EPSILON);

        if !w[0].is_finite() || !b.is_finite() {
            return Err(Error::Divergence { step });
        }
    }

    let model = LinearModel { w, b };
    let penalized_loss = penalized_loss(&model, data, cfg.penalty_coefficient);
    if !penalized_loss.is_finite() || model.w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { step: cfg.steps });
    }
    let train_accuracy = accuracy(&model, data);
    Ok(TrainOutcome {
        model,
        penalized_loss,
        train_accuracy,
    })
}
