//! Separable linear classification with a known input density.

pub mod attack;
pub mod mixture;
pub mod model;
pub mod scenario;

pub use attack::SyntheticAeg;
pub use mixture::{ground_truth, log_density, sample_dataset, Example, MixtureSpec, Sign};
pub use model::{train, LinearModel, TrainConfig, TrainOutcome};
pub use scenario::{prepare_run, run_scenario, Evaluation, PreparedRun, RunRecord, Scenario, ScenarioConfig};
