use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthetic::{Scenario, ScenarioConfig};
use crate::translation::Fixture;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Synthetic,
    TranslationalOracle,
}

/// Optional replacements for the default training protocol.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOverrides {
    pub steps: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
}

/// Attack strengths of the default synthetic sweep, log spaced over the
/// range where the tests change behavior.
pub const DEFAULT_EPSILON_GRID: [f64; 14] =
    [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 6.0, 10.0, 20.0, 50.0, 100.0];

pub const DEFAULT_RUNS: usize = 100;
pub const DEFAULT_N_MODEL_BINS: [usize; 4] = [1, 2, 10, 25];

/// Runs, steps and holdout size under `--quick`.
pub const QUICK_RUNS: usize = 4;
pub const QUICK_STEPS: usize = 5_000;
pub const QUICK_HOLDOUT: usize = 10_000;

/// A complete experiment description. Every field has a default, so `{}`
/// is the full-scale dependent sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub scenario: Scenario,
    /// Synthetic: attack strengths. Translational: integer radii applied to
    /// every fixture; absent means each fixture's own radius.
    pub epsilon_grid: Option<Vec<f64>>,
    pub runs: usize,
    pub n_model_bins: Vec<usize>,
    pub base_seed: u64,
    pub train: TrainOverrides,
    pub holdout_size: Option<usize>,
    /// Train one model per run and attack it at every strength, instead of
    /// one model per (strength, run) cell.
    pub share_model_across_epsilon: bool,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    /// Universe files for the translational oracle; empty means the shipped
    /// fixtures.
    pub fixtures: Vec<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::Synthetic,
            scenario: Scenario::Dependent,
            epsilon_grid: None,
            runs: DEFAULT_RUNS,
            n_model_bins: DEFAULT_N_MODEL_BINS.to_vec(),
            base_seed: 0,
            train: TrainOverrides::default(),
            holdout_size: None,
            share_model_across_epsilon: false,
            workers: 0,
            fixtures: Vec::new(),
            output_dir: None,
        }
    }
}

fn field_error(field: &str, reason: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{field}`: {reason}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Fewer runs, fewer steps and a smaller holdout. Training gates are
    /// unchanged.
    pub fn quick(mut self) -> Self {
        self.runs = self.runs.min(QUICK_RUNS);
        self.train.steps = Some(self.train.steps.map_or(QUICK_STEPS, |s| s.min(QUICK_STEPS)));
        self.holdout_size = Some(self.holdout_size.map_or(QUICK_HOLDOUT, |h| h.min(QUICK_HOLDOUT)));
        self.n_model_bins.retain(|&n| n <= self.runs);
        if self.n_model_bins.is_empty() {
            self.n_model_bins.push(1);
        }
        self
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.epsilon_grid.clone().unwrap_or_else(|| DEFAULT_EPSILON_GRID.to_vec())
    }

    pub fn scenario_config(&self) -> ScenarioConfig {
        let mut c = ScenarioConfig::new(self.scenario);
        if let Some(s) = self.train.steps {
            c.steps = s;
        }
        if let Some(b) = self.train.batch_size {
            c.batch_size = b;
        }
        if let Some(lr) = self.train.learning_rate {
            c.learning_rate = lr;
        }
        if let Some(h) = self.holdout_size {
            c.holdout_size = h;
        }
        c
    }

    pub fn fixture_paths(&self) -> Vec<PathBuf> {
        if !self.fixtures.is_empty() {
            return self.fixtures.clone();
        }
        shipped_fixtures()
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(field_error("runs", "must be at least 1"));
        }
        if self.n_model_bins.contains(&0) {
            return Err(field_error("n_model_bins", "entries must be at least 1"));
        }
        if let Some(&largest) = self.n_model_bins.iter().max() {
            if self.runs < largest {
                return Err(field_error(
                    "runs",
                    format!("{} runs cannot fill an n_model_bins entry of {largest}", self.runs),
                ));
            }
        }
        if let Some(grid) = &self.epsilon_grid {
            if grid.is_empty() {
                return Err(field_error("epsilon_grid", "is empty"));
            }
            if let Some(e) = grid.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
                return Err(field_error("epsilon_grid", format!("{e} is not positive")));
            }
        }
        match self.experiment {
            Experiment::Synthetic => self
                .scenario_config()
                .validate()
                .map_err(|e| field_error("train", e)),
            Experiment::TranslationalOracle => {
                if let Some(grid) = &self.epsilon_grid {
                    if let Some(e) = grid.iter().find(|e| e.fract() != 0.0) {
                        return Err(field_error("epsilon_grid", format!("{e} is not an integer translation")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Fixtures with the configured radii applied, each checked against its
    /// pad.
    pub fn load_fixtures(&self) -> Result<Vec<Fixture>> {
        let mut out = Vec::new();
        for path in self.fixture_paths() {
            let fixture = Fixture::load(&path)?;
            match &self.epsilon_grid {
                None => out.push(fixture),
                Some(grid) => {
                    for &e in grid {
                        let mut f = fixture.clone();
                        f.epsilon = e as u32;
                        f.validate()?;
                        out.push(f);
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(field_error("fixtures", "no universe files found"));
        }
        Ok(out)
    }
}

/// `*.universe` files in the crate's fixture directory, sorted by name.
pub fn shipped_fixtures() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "universe"))
                .collect()
        })
        .unwrap_or_default();
    paths.sort();
    paths
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_full_protocol() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.runs, 100);
        assert_eq!(c.epsilons().len(), DEFAULT_EPSILON_GRID.len());
        let s = c.scenario_config();
        assert_eq!((s.steps, s.batch_size, s.learning_rate), (50_000, 100, 0.01));
        c.validate().unwrap();
    }

    #[test]
    fn round_trip_and_overrides() {
        let text = r#"{"scenario": "independent", "epsilon_grid": [0.1, 10], "runs": 3,
            "n_model_bins": [1, 3], "train": {"steps": 200}, "base_seed": 9}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.scenario, Scenario::Independent);
        assert_eq!(c.scenario_config().steps, 200);
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn invalid_fields_are_named() {
        let cases = [
            (r#"{"runs": 0}"#, "runs"),
            (r#"{"runs": 5, "n_model_bins": [10]}"#, "runs"),
            (r#"{"epsilon_grid": [1, -2]}"#, "epsilon_grid"),
            (r#"{"train": {"learning_rate": -1}}"#, "train"),
            (r#"{"experiment": "translational-oracle", "epsilon_grid": [1.5]}"#, "epsilon_grid"),
        ];
        for (text, field) in cases {
            let err = ExperimentConfig::from_json(text).unwrap().validate().unwrap_err();
            assert!(err.to_string().contains(field), "{text}: {err}");
        }
        let err = ExperimentConfig::from_json(r#"{"rnus": 3}"#).unwrap_err();
        assert!(err.to_string().contains("rnus"));
    }

    #[test]
    fn quick_keeps_gates_and_trims_bins() {
        let c = ExperimentConfig::default().quick();
        assert_eq!(c.runs, QUICK_RUNS);
        assert_eq!(c.n_model_bins, vec![1, 2]);
        let s = c.scenario_config();
        assert_eq!(s.steps, QUICK_STEPS);
        assert_eq!(s.min_train_accuracy, 1.0);
        assert!(s.max_penalized_loss.is_some());
        c.validate().unwrap();
    }

    #[test]
    fn translational_radius_checked_against_pad() {
        let mut c = ExperimentConfig {
            experiment: Experiment::TranslationalOracle,
            ..Default::default()
        };
        assert!(c.load_fixtures().unwrap().len() >= 3);
        c.epsilon_grid = Some(vec![40.0]);
        assert!(matches!(c.load_fixtures(), Err(Error::EpsilonTooLarge { .. })));
    }
}
