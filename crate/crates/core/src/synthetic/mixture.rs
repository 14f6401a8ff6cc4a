//! Two-class truncated Gaussian mixture with a zero-density margin around the
//! hyperplane `x_1 = 0`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use crate::aeg::LabeledExample;
use crate::error::{Error, Result};
use crate::seed::ExperimentRng;

/// Binary label `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    /// `sgn` with `sgn(0) = +1`.
    pub fn of(v: f64) -> Sign {
        if v >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }
}

pub type Point = Vec<f64>;
pub type Example = LabeledExample<Point, Sign>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub dim: usize,
    /// Coordinate-wise standard deviation.
    pub sigma: f64,
    /// Magnitude of the first coordinate of the class means `(±offset, 0, …, 0)`.
    pub mean_offset: f64,
    /// Half-width of the zero-density band `|x_1| <= margin`.
    pub margin: f64,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        MixtureSpec {
            dim: 500,
            sigma: 500f64.sqrt(),
            mean_offset: 1.0,
            margin: 0.025,
        }
    }
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::invalid("sigma", "must be positive"));
        }
        if !(self.margin >= 0.0 && self.margin < self.mean_offset) {
            return Err(Error::invalid("margin", "must lie in [0, mean_offset)"));
        }
        Ok(())
    }

    /// Log of the probability mass each one-sided component keeps after
    /// truncation, `P(N(offset, σ²) > margin)`.
    fn log_truncated_mass(&self) -> f64 {
        let z = (self.mean_offset - self.margin) / self.sigma;
        StdNormal::standard().cdf(z).ln()
    }
}

/// `f*(x) = sgn(x_1)`.
pub fn ground_truth(x: &[f64]) -> Sign {
    Sign::of(x[0])
}

/// Draws one point of class `class` by rejection sampling the first
/// coordinate.
fn sample_point(spec: &MixtureSpec, class: Sign, rng: &mut ExperimentRng) -> Point {
    let first = Normal::new(class.value() * spec.mean_offset, spec.sigma).expect("valid sigma");
    let rest = Normal::new(0.0, spec.sigma).expect("valid sigma");
    let x1 = loop {
        let v = first.sample(rng);
        if class.value() * v > spec.margin {
            break v;
        }
    };
    let mut x = Vec::with_capacity(spec.dim);
    x.push(x1);
    x.extend((1..spec.dim).map(|_| rest.sample(rng)));
    x
}

/// `m` i.i.d. labelled draws from the mixture.
pub fn sample_dataset(spec: &MixtureSpec, m: usize, rng: &mut ExperimentRng) -> Vec<Example> {
    (0..m)
        .map(|_| {
            let class = if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus };
            let x = sample_point(spec, class, rng);
            let label = ground_truth(&x);
            LabeledExample::new(x, label)
        })
        .collect()
}

/// Streams `m` unlabelled-by-storage draws through `visit` without keeping
/// them, for large holdout estimates.
pub fn for_each_sample(
    spec: &MixtureSpec,
    m: usize,
    rng: &mut ExperimentRng,
    mut visit: impl FnMut(&[f64], Sign),
) {
    for _ in 0..m {
        let class = if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus };
        let x = sample_point(spec, class, rng);
        visit(&x, ground_truth(&x));
    }
}

/// `ln ρ(x)`; `-∞` inside the margin band.
pub fn log_density(spec: &MixtureSpec, x: &[f64]) -> f64 {
    let x1 = x[0];
    if x1.abs() <= spec.margin {
        return f64::NEG_INFINITY;
    }
    let mean1 = Sign::of(x1).value() * spec.mean_offset;
    let var = spec.sigma * spec.sigma;
    let sq: f64 = (x1 - mean1).powi(2) + x[1..].iter().map(|v| v * v).sum::<f64>();
    let d = x.len() as f64;
    0.5f64.ln() - spec.log_truncated_mass()
        - 0.5 * d * (2.0 * std::f64::consts::PI * var).ln()
        - sq / (2.0 * var)
}
