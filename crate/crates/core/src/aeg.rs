//! Classifiers, adversarial example generators (AEGs) and the importance
//! weighted risk estimates built from them.
//!
//! An AEG `g` for a classifier `f` must keep the true label of every point
//! (G1) and must leave misclassified points where they are (G2). Its density
//! weight `h_g` is the Radon-Nikodym derivative of the data distribution with
//! respect to the distribution of `g(X)`, restricted to the error set; it
//! lies in `[0, 1]` there and is never evaluated elsewhere.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::PairedObservation;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample<X, Y> {
    pub input: X,
    pub label: Y,
}

impl<X, Y> LabeledExample<X, Y> {
    pub fn new(input: X, label: Y) -> Self {
        LabeledExample { input, label }
    }
}

/// A deterministic classifier.
pub trait Classifier<X: ?Sized> {
    type Label: Copy + Eq + Debug;

    fn predict(&self, x: &X) -> Self::Label;

    /// Class scores, for classifiers that have them. When present,
    /// `predict` must agree with [`argmax`] of the scores.
    fn logits(&self, _x: &X) -> Option<Vec<f64>> {
        None
    }
}

impl<X: ?Sized, C: Classifier<X> + ?Sized> Classifier<X> for &C {
    type Label = C::Label;

    fn predict(&self, x: &X) -> Self::Label {
        (**self).predict(x)
    }

    fn logits(&self, x: &X) -> Option<Vec<f64>> {
        (**self).logits(x)
    }
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// The labelling function of the task.
pub trait GroundTruth<X: ?Sized> {
    type Label: Copy + Eq + Debug;

    fn label(&self, x: &X) -> Self::Label;
}

impl<X: ?Sized, Y: Copy + Eq + Debug, F: Fn(&X) -> Y> GroundTruth<X> for F {
    type Label = Y;

    fn label(&self, x: &X) -> Y {
        self(x)
    }
}

/// Name and strength of an AEG, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AegDescriptor {
    pub variant: String,
    pub strength: f64,
}

/// An adversarial example generator with a computable density weight.
pub trait AdversarialGenerator<X> {
    /// The map `g`. `index` is the position of `x` in the sample; randomized
    /// generators derive their per-example randomness from it.
    fn perturb(&self, x: &X, index: usize) -> Result<X>;

    /// `h_g(x')`, queried only at points the classifier gets wrong.
    fn density_weight(&self, x_adv: &X) -> Result<f64>;

    fn descriptor(&self) -> AegDescriptor;

    /// Upper bound on `sup T_i - inf T_i`.
    fn range_bound(&self) -> f64 {
        2.0
    }
}

/// The identity generator; its density weight is 1 everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityAeg;

impl<X: Clone> AdversarialGenerator<X> for IdentityAeg {
    fn perturb(&self, x: &X, _index: usize) -> Result<X> {
        Ok(x.clone())
    }

    fn density_weight(&self, _x_adv: &X) -> Result<f64> {
        Ok(1.0)
    }

    fn descriptor(&self) -> AegDescriptor {
        AegDescriptor {
            variant: "identity".into(),
            strength: 0.0,
        }
    }

    fn range_bound(&self) -> f64 {
        1.0
    }
}

fn zero_one<F, X>(f: &F, x: &X, y: F::Label) -> f64
where
    F: Classifier<X>,
{
    if f.predict(x) == y {
        0.0
    } else {
        1.0
    }
}

/// Fraction of misclassified examples.
pub fn empirical_error_rate<F, X>(f: &F, s: &[LabeledExample<X, F::Label>]) -> Result<f64>
where
    F: Classifier<X>,
{
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    let errors: f64 = s.iter().map(|e| zero_one(f, &e.input, e.label)).sum();
    Ok(errors / s.len() as f64)
}

/// Per-example original loss, weighted adversarial loss and their difference.
pub fn build_paired_sample<F, G, X>(
    f: &F,
    g: &G,
    s: &[LabeledExample<X, F::Label>],
) -> Result<Vec<PairedObservation>>
where
    F: Classifier<X>,
    G: AdversarialGenerator<X>,
{
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    s.iter()
        .enumerate()
        .map(|(index, e)| {
            let original = zero_one(f, &e.input, e.label);
            let adv = g.perturb(&e.input, index)?;
            let adversarial = zero_one(f, &adv, e.label);
            let weight = if adversarial > 0.0 {
                let h = g.density_weight(&adv)?;
                if !(0.0..=1.0).contains(&h) {
                    return Err(Error::WeightOutOfRange { index, weight: h });
                }
                Some(h)
            } else {
                None
            };
            Ok(PairedObservation::new(original, adversarial, weight))
        })
        .collect()
}

/// Mean of the weighted adversarial losses.
pub fn adversarial_risk_estimate(obs: &[PairedObservation]) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(obs.iter().map(|o| o.weighted_adv_loss).sum::<f64>() / obs.len() as f64)
}

/// Error rate on the perturbed points, without importance weights.
pub fn unweighted_adversarial_error_rate<F, G, X>(
    f: &F,
    g: &G,
    s: &[LabeledExample<X, F::Label>],
) -> Result<f64>
where
    F: Classifier<X>,
    G: AdversarialGenerator<X>,
{
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut errors = 0.0;
    for (index, e) in s.iter().enumerate() {
        let adv = g.perturb(&e.input, index)?;
        errors += zero_one(f, &adv, e.label);
    }
    Ok(errors / s.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// Label preservation.
    G1,
    /// Misclassified points are fixed.
    G2,
    /// Density preservation.
    G3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub condition: Condition,
    pub detail: String,
}

/// Optional density check for [`verify_aeg_conditions`].
pub struct DensityCheck<'a, X> {
    pub density: &'a dyn Fn(&X) -> f64,
    /// Absolute tolerance on `|ρ(x) - ρ(g(x))|`; zero demands exact equality.
    pub tolerance: f64,
}

/// Lists every sampled example at which `g` breaks G1 or G2 (and G3 when a
/// density is supplied). An empty report means all checks passed.
pub fn verify_aeg_conditions<F, T, G, X>(
    f: &F,
    ground_truth: &T,
    g: &G,
    s: &[LabeledExample<X, F::Label>],
    density: Option<DensityCheck<'_, X>>,
) -> Vec<Violation>
where
    F: Classifier<X>,
    T: GroundTruth<X, Label = F::Label>,
    G: AdversarialGenerator<X>,
    X: PartialEq,
{
    let mut report = Vec::new();
    for (index, e) in s.iter().enumerate() {
        let adv = match g.perturb(&e.input, index) {
            Ok(adv) => adv,
            Err(err) => {
                report.push(Violation {
                    index,
                    condition: Condition::G1,
                    detail: format!("generator failed: {err}"),
                });
                continue;
            }
        };
        let truth = ground_truth.label(&e.input);
        let truth_adv = ground_truth.label(&adv);
        if truth != truth_adv {
            report.push(Violation {
                index,
                condition: Condition::G1,
                detail: format!("true label changed from {truth:?} to {truth_adv:?}"),
            });
        }
        if f.predict(&e.input) != truth && adv != e.input {
            report.push(Violation {
                index,
                condition: Condition::G2,
                detail: "misclassified point was moved".into(),
            });
        }
        if let Some(check) = &density {
            if adv != e.input {
                let (before, after) = ((check.density)(&e.input), (check.density)(&adv));
                if !((before - after).abs() <= check.tolerance) {
                    report.push(Violation {
                        index,
                        condition: Condition::G3,
                        detail: format!("density changed from {before} to {after}"),
                    });
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Thresholds a scalar at `cut`.
    struct Threshold {
        cut: i32,
    }

    impl Classifier<i32> for Threshold {
        type Label = bool;
        fn predict(&self, x: &i32) -> bool {
            *x >= self.cut
        }
    }

    fn truth(x: &i32) -> bool {
        *x >= 0
    }

    fn sample(xs: &[i32]) -> Vec<LabeledExample<i32, bool>> {
        xs.iter().map(|&x| LabeledExample::new(x, truth(&x))).collect()
    }

    /// Moves correctly classified points at `from` onto `to`; weights come
    /// from a fixed table.
    struct TableAeg {
        moves: Vec<(i32, i32)>,
        weights: Vec<(i32, f64)>,
    }

    impl AdversarialGenerator<i32> for TableAeg {
        fn perturb(&self, x: &i32, _index: usize) -> Result<i32> {
            Ok(self
                .moves
                .iter()
                .find(|(from, _)| from == x)
                .map(|&(_, to)| to)
                .unwrap_or(*x))
        }
        fn density_weight(&self, x: &i32) -> Result<f64> {
            Ok(self
                .weights
                .iter()
                .find(|(p, _)| p == x)
                .map(|&(_, w)| w)
                .unwrap_or(1.0))
        }
        fn descriptor(&self) -> AegDescriptor {
            AegDescriptor {
                variant: "table".into(),
                strength: 1.0,
            }
        }
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0, 2.0]), 0);
        assert_eq!(argmax(&[-1.0]), 0);
    }

    #[test]
    fn error_rate_examples() {
        let s = sample(&[-3, -2, -1, 0, 1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(empirical_error_rate(&Threshold { cut: 0 }, &s).unwrap(), 0.0);
        // Cut at 3 misclassifies 0, 1 and 2.
        assert_eq!(empirical_error_rate(&Threshold { cut: 3 }, &s).unwrap(), 0.25);
        struct Wrong;
        impl Classifier<i32> for Wrong {
            type Label = bool;
            fn predict(&self, x: &i32) -> bool {
                !truth(x)
            }
        }
        assert_eq!(empirical_error_rate(&Wrong, &s).unwrap(), 1.0);
        assert!(matches!(
            empirical_error_rate(&Wrong, &sample(&[])),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn identity_aeg_gives_zero_differences() {
        let f = Threshold { cut: 2 };
        let s = sample(&[-2, -1, 0, 1, 2, 3]);
        let obs = build_paired_sample(&f, &IdentityAeg, &s).unwrap();
        assert!(obs.iter().all(|o| o.t_value == 0.0));
        assert_eq!(
            adversarial_risk_estimate(&obs).unwrap(),
            empirical_error_rate(&f, &s).unwrap()
        );
        assert_eq!(
            unweighted_adversarial_error_rate(&f, &IdentityAeg, &s).unwrap(),
            empirical_error_rate(&f, &s).unwrap()
        );
        assert!(verify_aeg_conditions(&f, &truth, &IdentityAeg, &s, None).is_empty());
    }

    #[test]
    fn hand_enumerated_paired_table() {
        // Cut at 3: points 0, 1, 2 are misclassified (true label +, predicted -).
        let f = Threshold { cut: 3 };
        let g = TableAeg {
            // 4 -> 2 and 5 -> 1 are successful attacks; 7 -> 6 is not.
            moves: vec![(4, 2), (5, 1), (7, 6)],
            weights: vec![(2, 0.5), (1, 0.5), (0, 1.0)],
        };
        let s = sample(&[-2, -1, 0, 1, 2, 4, 5, 7]);
        let obs = build_paired_sample(&f, &g, &s).unwrap();
        let t: Vec<f64> = obs.iter().map(|o| o.t_value).collect();
        assert_eq!(t, vec![0.0, 0.0, 0.0, -0.5, -0.5, 0.5, 0.5, 0.0]);
        let w: Vec<Option<f64>> = obs.iter().map(|o| o.weight).collect();
        assert_eq!(
            w,
            vec![None, None, Some(1.0), Some(0.5), Some(0.5), Some(0.5), Some(0.5), None]
        );
        assert_eq!(unweighted_adversarial_error_rate(&f, &g, &s).unwrap(), 5.0 / 8.0);
        assert_eq!(empirical_error_rate(&f, &s).unwrap(), 3.0 / 8.0);
        assert!(verify_aeg_conditions(&f, &truth, &g, &s, None).is_empty());
    }

    #[test]
    fn adversarial_risk_hand_arithmetic() {
        let obs: Vec<_> = [1.0 / 2.0, 1.0 / 3.0, 0.0, 0.0]
            .iter()
            .map(|&w| PairedObservation::new(0.0, if w > 0.0 { 1.0 } else { 0.0 }, Some(w)))
            .collect();
        assert_abs_diff_eq!(adversarial_risk_estimate(&obs).unwrap(), 5.0 / 24.0, epsilon = 1e-15);
        let clean: Vec<_> = (0..4).map(|_| PairedObservation::new(0.0, 0.0, None)).collect();
        assert_eq!(adversarial_risk_estimate(&clean).unwrap(), 0.0);
        assert!(adversarial_risk_estimate(&[]).is_err());
    }

    #[test]
    fn weight_out_of_range_is_an_error() {
        let f = Threshold { cut: 3 };
        let g = TableAeg {
            moves: vec![],
            weights: vec![(1, 1.5)],
        };
        assert!(matches!(
            build_paired_sample(&f, &g, &sample(&[5, 1])),
            Err(Error::WeightOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn detects_g1_and_g2_violations() {
        let f = Threshold { cut: 3 };
        let g = TableAeg {
            // 1 is misclassified and gets moved (G2); 5 -> -4 flips the true label (G1).
            moves: vec![(1, 2), (5, -4)],
            weights: vec![],
        };
        let report = verify_aeg_conditions(&f, &truth, &g, &sample(&[1, 5, 6]), None);
        assert_eq!(report.len(), 2);
        assert_eq!((report[0].index, report[0].condition), (0, Condition::G2));
        assert_eq!((report[1].index, report[1].condition), (1, Condition::G1));
    }

    #[test]
    fn density_check_uses_tolerance() {
        let f = Threshold { cut: 0 };
        let g = TableAeg {
            moves: vec![(4, 5)],
            weights: vec![],
        };
        let density = |x: &i32| if *x == 5 { 0.2 } else { 0.1 };
        let s = sample(&[4, 6]);
        let strict = verify_aeg_conditions(
            &f,
            &truth,
            &g,
            &s,
            Some(DensityCheck { density: &density, tolerance: 0.0 }),
        );
        assert_eq!(strict.len(), 1);
        assert_eq!(strict[0].condition, Condition::G3);
        let loose = verify_aeg_conditions(
            &f,
            &truth,
            &g,
            &s,
            Some(DensityCheck { density: &density, tolerance: 0.2 }),
        );
        assert!(loose.is_empty());
    }
}
