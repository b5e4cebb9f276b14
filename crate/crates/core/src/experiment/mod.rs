//! Training runs, evaluation, disturbance and periodicity tests, and the
//! metrics and files they produce.

pub mod checkpoint;
pub mod config;
pub mod disturb;
pub mod metrics;
pub mod orbits;
pub mod reproduce;
pub mod train;

pub use checkpoint::{evaluate, policy_action, Evaluation, PolicyCheckpoint};
pub use config::{
    AcceptancePlan, DisturbanceScript, EvalProtocol, ExperimentConfig, PeriodicityConfig,
};
pub use disturb::{disturbance_test, DisturbSample, DisturbanceReport, SeedTrace};
pub use metrics::{
    cost_of_transport, periodicity_score, rise_statistics, CurvePoint, Rise, RunMetrics,
};
pub use orbits::{periodicity_report, PeriodicityReport};
pub use reproduce::{assess, reproduce, Criterion, ReproductionReport};
pub use train::{train_run, TrainOutcome, TrainSummary};
