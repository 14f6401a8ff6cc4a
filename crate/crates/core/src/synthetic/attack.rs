//! One-step L2 gradient attack on the linear model, gated so that it is a
//! valid AEG, and its exact density weight.
//!
//! For a correctly classified `x` with label `y` the candidate is
//! `x' = x - ε y w/‖w‖`. It is used only when `x'` keeps the true label;
//! otherwise `g(x) = x`. A misclassified point `x'` therefore has at most two
//! preimages: itself, and `z = x' + ε y w/‖w‖` when `z` is correctly
//! classified with the same true label. Hence
//! `h_g(x') = ρ(x') / (ρ(x') + ρ(z)·1{z contributes})`.

use super::mixture::{ground_truth, log_density, MixtureSpec, Sign};
use super::model::LinearModel;
use crate::aeg::{AdversarialGenerator, AegDescriptor, Classifier};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SyntheticAeg {
    model: LinearModel,
    spec: MixtureSpec,
    epsilon: f64,
    direction: Vec<f64>,
}

impl SyntheticAeg {
    pub fn new(model: LinearModel, spec: MixtureSpec, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::invalid("epsilon", format!("must be finite and >= 0, got {epsilon}")));
        }
        let norm = model.weight_norm();
        if !(norm > 0.0) {
            return Err(Error::ZeroWeightVector);
        }
        let direction = model.w.iter().map(|v| v / norm).collect();
        Ok(SyntheticAeg {
            model,
            spec,
            epsilon,
            direction,
        })
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `x + step·y·w/‖w‖`.
    fn shifted(&self, x: &[f64], y: Sign, step: f64) -> Vec<f64> {
        let s = step * y.value();
        x.iter().zip(&self.direction).map(|(a, d)| a + s * d).collect()
    }

    pub fn perturb_point(&self, x: &[f64]) -> Vec<f64> {
        let y = ground_truth(x);
        if self.model.predict(x) != y || self.epsilon == 0.0 {
            return x.to_vec();
        }
        let candidate = self.shifted(x, y, -self.epsilon);
        if ground_truth(&candidate) != y {
            return x.to_vec();
        }
        candidate
    }

    /// `h_g(x')` at a misclassified point, evaluated in log space.
    ///
    /// When `ρ(x') = 0` (a point pushed into the margin) the weight is 0 if
    /// the preimage carries mass and 1 otherwise.
    pub fn weight_at(&self, x_adv: &[f64]) -> Result<f64> {
        let y = ground_truth(x_adv);
        if self.model.predict(x_adv) == y {
            return Err(Error::NotMisclassified);
        }
        let preimage = self.shifted(x_adv, y, self.epsilon);
        let contributes = self.epsilon > 0.0
            && ground_truth(&preimage) == y
            && self.model.predict(&preimage[..]) == y;
        if !contributes {
            return Ok(1.0);
        }
        let log_self = log_density(&self.spec, x_adv);
        let log_pre = log_density(&self.spec, &preimage);
        if log_self == f64::NEG_INFINITY {
            return Ok(if log_pre == f64::NEG_INFINITY { 1.0 } else { 0.0 });
        }
        // ρ(x') / (ρ(x') + ρ(z)) = 1 / (1 + exp(ln ρ(z) - ln ρ(x')))
        Ok(1.0 / (1.0 + (log_pre - log_self).exp()))
    }
}

impl AdversarialGenerator<Vec<f64>> for SyntheticAeg {
    fn perturb(&self, x: &Vec<f64>, _index: usize) -> Result<Vec<f64>> {
        Ok(self.perturb_point(x))
    }

    fn density_weight(&self, x_adv: &Vec<f64>) -> Result<f64> {
        self.weight_at(x_adv)
    }

    fn descriptor(&self) -> AegDescriptor {
        AegDescriptor {
            variant: "l2-gradient".into(),
            strength: self.epsilon,
        }
    }
}
