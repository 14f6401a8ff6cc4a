//! One run of the synthetic experiment: sample data, train, attack at a
//! given strength and test independence.

use serde::{Deserialize, Serialize};

use super::attack::SyntheticAeg;
use super::mixture::{for_each_sample, sample_dataset, Example, MixtureSpec};
use super::model::{train, LinearModel, TrainConfig, TrainOutcome, SINGLE_PRECISION_SATURATION};
use crate::aeg::{build_paired_sample, unweighted_adversarial_error_rate, verify_aeg_conditions, Classifier};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};
use crate::stats::{basic_interval_test, pairwise_test, PairedObservation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Model trained on fresh data, tested on a large independent sample.
    Independent,
    /// Model trained on half of the test set with a penalty that pushes the
    /// boundary off the true one.
    Dependent,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Independent => "independent",
            Scenario::Dependent => "dependent",
        }
    }

    pub fn parse(s: &str) -> Option<Scenario> {
        match s {
            "independent" => Some(Scenario::Independent),
            "dependent" => Some(Scenario::Dependent),
            _ => None,
        }
    }
}

/// Range of `T_i = h·L(g(x)) - L(x)` for the synthetic AEG.
pub const RANGE_U: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub spec: MixtureSpec,
    /// Fresh training points; ignored by the dependent scenario, which trains
    /// on the first half of the test set.
    pub train_size: usize,
    pub test_size: usize,
    /// Fresh points used to estimate the true risk `R(f)`; 0 disables it.
    pub holdout_size: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub penalty_coefficient: f64,
    /// See [`TrainConfig::saturation_margin`].
    pub saturation_margin: Option<f64>,
    /// Per-interval `δ` of the interval test (confidence `1 - 2δ`).
    pub basic_delta: f64,
    /// Trained models with lower training accuracy are rejected.
    pub min_train_accuracy: f64,
    /// Trained models with a larger penalized training loss are rejected.
    pub max_penalized_loss: Option<f64>,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        let base = ScenarioConfig {
            scenario,
            spec: MixtureSpec::default(),
            train_size: 500,
            test_size: 10_000,
            holdout_size: 100_000,
            steps: 50_000,
            batch_size: 100,
            learning_rate: 0.01,
            penalty_coefficient: 0.0,
            saturation_margin: Some(SINGLE_PRECISION_SATURATION),
            basic_delta: 0.025,
            min_train_accuracy: 1.0,
            max_penalized_loss: None,
        };
        match scenario {
            Scenario::Independent => base,
            Scenario::Dependent => ScenarioConfig {
                test_size: 1000,
                train_size: 500,
                penalty_coefficient: 1e4,
                max_penalized_loss: Some(DEPENDENT_LOSS_GATE),
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.test_size < 1 {
            return Err(Error::invalid("test_size", "must be at least 1"));
        }
        match self.scenario {
            Scenario::Independent if self.train_size < 1 => {
                return Err(Error::invalid("train_size", "must be at least 1"))
            }
            Scenario::Dependent if self.train_size < 1 || self.train_size > self.test_size => {
                return Err(Error::invalid("train_size", "must lie in [1, test_size]"))
            }
            _ => {}
        }
        if !(self.basic_delta > 0.0 && self.basic_delta < 0.5) {
            return Err(Error::invalid("basic_delta", "must lie in (0, 1/2)"));
        }
        if !(0.0..=1.0).contains(&self.min_train_accuracy) {
            return Err(Error::invalid("min_train_accuracy", "must lie in [0, 1]"));
        }
        self.train_config(0).validate()
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            steps: self.steps,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            penalty_coefficient: self.penalty_coefficient,
            seed,
            saturation_margin: self.saturation_margin,
        }
    }
}

/// Upper limit on the penalized training loss of a dependent-scenario model.
pub const DEPENDENT_LOSS_GATE: f64 = 0.3;

/// Per-run outcome at one attack strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: Scenario,
    pub epsilon: f64,
    pub seed: u64,
    pub p_value: f64,
    pub basic_test_reject: bool,
    /// Test error rate.
    pub r_hat_s: f64,
    /// Importance weighted adversarial risk estimate.
    pub r_hat_g: f64,
    /// Unweighted error rate on the perturbed test set.
    pub r_hat_s_prime: f64,
    pub sigma_t2: f64,
    /// Mean weight over originally misclassified points; NaN when there are none.
    pub avg_weight_misclassified: f64,
    /// Mean weight over successful adversarial examples; NaN when there are none.
    pub avg_weight_successful_adv: f64,
    /// Error rate on a fresh holdout; NaN when disabled.
    pub true_risk_estimate: f64,
}

/// A trained model together with the data it is tested on.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub test: Vec<Example>,
    pub outcome: TrainOutcome,
    pub true_risk_estimate: f64,
}

const TEST_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;
const TRAINING_STREAM: u64 = 3;
const HOLDOUT_STREAM: u64 = 4;

/// Samples the data and trains the model of one run, enforcing the
/// training gates.
pub fn prepare_run(cfg: &ScenarioConfig, seed: u64) -> Result<PreparedRun> {
    cfg.validate()?;
    let test = sample_dataset(&cfg.spec, cfg.test_size, &mut rng_from(seed, &[TEST_STREAM]));
    let train_cfg = cfg.train_config(derive_seed(seed, &[TRAINING_STREAM]));
    let outcome = match cfg.scenario {
        Scenario::Independent => {
            let data = sample_dataset(&cfg.spec, cfg.train_size, &mut rng_from(seed, &[TRAIN_STREAM]));
            train(&data, &train_cfg)?
        }
        Scenario::Dependent => train(&test[..cfg.train_size], &train_cfg)?,
    };
    if outcome.train_accuracy < cfg.min_train_accuracy {
        return Err(Error::TrainingGate(format!(
            "training accuracy {} below {}",
            outcome.train_accuracy, cfg.min_train_accuracy
        )));
    }
    if let Some(limit) = cfg.max_penalized_loss {
        if !(outcome.penalized_loss <= limit) {
            return Err(Error::TrainingGate(format!(
                "penalized training loss {} above {limit}",
                outcome.penalized_loss
            )));
        }
    }
    let true_risk_estimate = holdout_risk(&cfg.spec, &outcome.model, cfg.holdout_size, seed);
    Ok(PreparedRun {
        config: *cfg,
        seed,
        test,
        outcome,
        true_risk_estimate,
    })
}

fn holdout_risk(spec: &MixtureSpec, model: &LinearModel, size: usize, seed: u64) -> f64 {
    if size == 0 {
        return f64::NAN;
    }
    let mut errors = 0usize;
    for_each_sample(spec, size, &mut rng_from(seed, &[HOLDOUT_STREAM]), |x, y| {
        if model.predict(x) != y {
            errors += 1;
        }
    });
    errors as f64 / size as f64
}

/// A record and the per-example differences it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub record: RunRecord,
    pub t_values: Vec<f64>,
}

fn mean_or_nan(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

impl PreparedRun {
    pub fn model(&self) -> &LinearModel {
        &self.outcome.model
    }

    /// Attacks the test set at strength `epsilon` and runs both tests.
    /// Fails if the generator breaks G1 or G2 on any test point.
    pub fn evaluate(&self, epsilon: f64) -> Result<Evaluation> {
        let model = self.model();
        let g = SyntheticAeg::new(model.clone(), self.config.spec, epsilon)?;
        let truth = |x: &Vec<f64>| super::mixture::ground_truth(x);
        let violations = verify_aeg_conditions(model, &truth, &g, &self.test, None);
        if let Some(v) = violations.first() {
            return Err(Error::AegCondition(format!(
                "{} violations, first at index {} ({:?}): {}",
                violations.len(),
                v.index,
                v.condition,
                v.detail
            )));
        }
        let obs = build_paired_sample(model, &g, &self.test)?;
        let verdict = pairwise_test(&obs, RANGE_U, 0.05)?;
        let original: Vec<f64> = obs.iter().map(|o| o.original_loss).collect();
        let weighted: Vec<f64> = obs.iter().map(|o| o.weighted_adv_loss).collect();
        let basic = basic_interval_test(&original, &weighted, self.config.basic_delta)?;
        let m = obs.len() as f64;
        let r_hat_s = original.iter().sum::<f64>() / m;
        let r_hat_g = weighted.iter().sum::<f64>() / m;
        let r_hat_s_prime = unweighted_adversarial_error_rate(model, &g, &self.test)?;
        let weight_of = |o: &PairedObservation| o.weight;
        let avg_weight_misclassified =
            mean_or_nan(obs.iter().filter(|o| o.original_loss > 0.0).filter_map(weight_of));
        let avg_weight_successful_adv =
            mean_or_nan(obs.iter().filter(|o| o.original_loss == 0.0).filter_map(weight_of));
        let record = RunRecord {
            scenario: self.config.scenario,
            epsilon,
            seed: self.seed,
            p_value: verdict.p_value,
            basic_test_reject: basic.reject,
            r_hat_s,
            r_hat_g,
            r_hat_s_prime,
            sigma_t2: verdict.sigma_t2,
            avg_weight_misclassified,
            avg_weight_successful_adv,
            true_risk_estimate: self.true_risk_estimate,
        };
        Ok(Evaluation {
            record,
            t_values: obs.iter().map(|o| o.t_value).collect(),
        })
    }
}

/// Prepares and evaluates a single run at full default scale.
pub fn run_scenario(scenario: Scenario, epsilon: f64, seed: u64) -> Result<RunRecord> {
    let run = prepare_run(&ScenarioConfig::new(scenario), seed)?;
    Ok(run.evaluate(epsilon)?.record)
}
