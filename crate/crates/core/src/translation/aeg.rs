//! Translational AEGs and their exact density weights.
//!
//! For a deterministic `g`, a misclassified image `x` is hit by itself and by
//! every neighbor `τ_{-v}(x)` with `g(τ_{-v}(x)) = x`, so under a
//! translation-invariant density `h_g(x) = 1 / (1 + n(x))`. For randomized
//! `g` the indicator becomes the probability of drawing `x`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::image::{max_valid_epsilon, Shift, SourceImage, TranslationSet};
use crate::aeg::{AdversarialGenerator, AegDescriptor, Classifier};
use crate::error::{Error, Result};
use crate::seed::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Misclassified translation with the largest excess logit.
    Strongest,
    /// Misclassified translation closest in `L2`.
    Nearest,
    /// Uniform over `𝒱_ε`.
    Random,
    /// Uniform over `𝒱_ε ∪ {0}`.
    Random2,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Strongest, Variant::Nearest, Variant::Random, Variant::Random2];

    pub fn is_deterministic(self) -> bool {
        matches!(self, Variant::Strongest | Variant::Nearest)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Strongest => "strongest",
            Variant::Nearest => "nearest",
            Variant::Random => "random",
            Variant::Random2 => "random2",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationalAegConfig {
    pub variant: Variant,
    pub epsilon: u32,
    /// Used by the random variants only.
    pub seed: u64,
}

impl TranslationalAegConfig {
    /// `3/2` when `g` is deterministic (weights of successful examples are at
    /// most `1/2`), `2` otherwise.
    pub fn range_bound(&self) -> f64 {
        if self.variant.is_deterministic() {
            1.5
        } else {
            2.0
        }
    }
}

/// `max_i l_i - l_y`; always `>= 0`.
pub fn excess_logit<F>(f: &F, img: &SourceImage, y: usize) -> Result<f64>
where
    F: Classifier<SourceImage, Label = usize> + ?Sized,
{
    let logits = f.logits(img).ok_or(Error::MissingLogits)?;
    let true_logit = *logits
        .get(y)
        .ok_or_else(|| Error::invalid("label", format!("class {y} has no logit")))?;
    Ok(logits.iter().copied().fold(f64::NEG_INFINITY, f64::max) - true_logit)
}

/// A translational AEG bound to a classifier.
pub struct TranslationalAeg<'a, F: ?Sized> {
    config: TranslationalAegConfig,
    set: TranslationSet,
    classifier: &'a F,
}

impl<'a, F> TranslationalAeg<'a, F>
where
    F: Classifier<SourceImage, Label = usize> + ?Sized,
{
    pub fn new(config: TranslationalAegConfig, classifier: &'a F) -> Result<Self> {
        Ok(TranslationalAeg {
            set: TranslationSet::new(config.epsilon)?,
            config,
            classifier,
        })
    }

    pub fn config(&self) -> &TranslationalAegConfig {
        &self.config
    }

    pub fn translation_set(&self) -> &TranslationSet {
        &self.set
    }

    fn check_radius(&self, img: &SourceImage) -> Result<()> {
        let max = max_valid_epsilon(img.pad());
        if self.config.epsilon > max {
            return Err(Error::EpsilonTooLarge {
                epsilon: self.config.epsilon,
                max,
                pad: img.pad(),
            });
        }
        Ok(())
    }

    fn correct(&self, img: &SourceImage) -> bool {
        self.classifier.predict(img) == img.label()
    }

    /// Chosen shift of a deterministic variant, `None` when `g(x) = x`.
    fn deterministic_choice(&self, img: &SourceImage) -> Result<Option<Shift>> {
        if !self.correct(img) {
            return Ok(None);
        }
        let mut best: Option<(Shift, f64)> = None;
        for &v in self.set.vectors() {
            let cand = img.translate(v)?;
            if self.correct(&cand) {
                continue;
            }
            // Larger score wins; strict comparison keeps the first in scan order.
            let score = match self.config.variant {
                Variant::Strongest => excess_logit(self.classifier, &cand, img.label())?,
                Variant::Nearest => -(v.norm2_squared() as f64),
                Variant::Random | Variant::Random2 => unreachable!("deterministic variants only"),
            };
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((v, score));
            }
        }
        Ok(best.map(|(v, _)| v))
    }

    /// `g` of a deterministic variant.
    fn apply_deterministic(&self, img: &SourceImage) -> Result<SourceImage> {
        match self.deterministic_choice(img)? {
            Some(v) => img.translate(v),
            None => Ok(img.clone()),
        }
    }

    /// Every image a random variant may return for a correctly classified
    /// `img`, each with equal probability.
    pub fn random_candidates(&self, img: &SourceImage) -> Result<Vec<SourceImage>> {
        let mut out = self
            .set
            .vectors()
            .iter()
            .map(|&v| img.translate(v))
            .collect::<Result<Vec<_>>>()?;
        if self.config.variant == Variant::Random2 {
            out.push(img.clone());
        }
        Ok(out)
    }

    /// `g(img)`; `index` seeds the draw of the random variants.
    pub fn perturb_image(&self, img: &SourceImage, index: usize) -> Result<SourceImage> {
        self.check_radius(img)?;
        match self.config.variant {
            Variant::Strongest | Variant::Nearest => self.apply_deterministic(img),
            Variant::Random | Variant::Random2 => {
                if !self.correct(img) {
                    return Ok(img.clone());
                }
                let choices = self.set.len() + usize::from(self.config.variant == Variant::Random2);
                let pick = rng_from(self.config.seed, &[index as u64]).random_range(0..choices);
                match self.set.vectors().get(pick) {
                    Some(&v) => img.translate(v),
                    None => Ok(img.clone()),
                }
            }
        }
    }

    /// Neighbors `τ_{-v}(img)` that `g` can map onto `img`: for deterministic
    /// variants those that it does map there (`n(x)`), for random variants the
    /// correctly classified ones.
    pub fn neighbor_count(&self, img: &SourceImage) -> Result<usize> {
        self.check_radius(img)?;
        if self.correct(img) {
            return Err(Error::NotMisclassified);
        }
        let mut count = 0;
        for &v in self.set.vectors() {
            let neighbor = img.translate(v.reversed())?;
            let hit = if self.config.variant.is_deterministic() {
                self.apply_deterministic(&neighbor)? == *img
            } else {
                self.correct(&neighbor)
            };
            count += usize::from(hit);
        }
        Ok(count)
    }

    /// `h_g(img)` for a misclassified image.
    pub fn weight(&self, img: &SourceImage) -> Result<f64> {
        let n = self.neighbor_count(img)? as f64;
        let mass = match self.config.variant {
            Variant::Strongest | Variant::Nearest => n,
            Variant::Random => n / self.set.len() as f64,
            Variant::Random2 => n / (self.set.len() + 1) as f64,
        };
        Ok(1.0 / (1.0 + mass))
    }
}

impl<F> AdversarialGenerator<SourceImage> for TranslationalAeg<'_, F>
where
    F: Classifier<SourceImage, Label = usize> + ?Sized,
{
    fn perturb(&self, x: &SourceImage, index: usize) -> Result<SourceImage> {
        self.perturb_image(x, index)
    }

    fn density_weight(&self, x_adv: &SourceImage) -> Result<f64> {
        self.weight(x_adv)
    }

    fn descriptor(&self) -> AegDescriptor {
        AegDescriptor {
            variant: self.config.variant.name().into(),
            strength: self.config.epsilon as f64,
        }
    }

    fn range_bound(&self) -> f64 {
        self.config.range_bound()
    }
}
