//! Competence-difficulty alignment sampling (CDAS) for RL training loops.
//!
//! The crate estimates per-problem difficulty from the gap between expected
//! and observed pass rates, derives a model competence from those estimates,
//! and samples the problems whose difficulty sits closest to that
//! competence. Alongside the sampler it provides:
//!
//! - the four comparison strategies in [`baseline`],
//! - GRPO group statistics in [`grpo`],
//! - a solver for the equilibrium the estimates settle into ([`fixed_point`]),
//! - a synthetic learner ([`learner`]) and a run harness ([`harness`]) for
//!   desk-scale comparisons with per-step [`metrics`].

pub mod baseline;
pub mod cdas;
pub mod error;
pub mod fixed_point;
pub mod grpo;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod sampler;
pub mod scheduler;

pub use baseline::{BaselineConfig, BaselineState, BaselineStrategy, DynamicBatch};
pub use cdas::{CdasConfig, CdasState, Side};
pub use error::{Error, Result};
pub use fixed_point::{EquilibriumProblem, EquilibriumSolution, Trajectory};
pub use grpo::{group_advantages, rule_reward, GroupAdvantages, RolloutGroup};
pub use harness::{
    compare, run, sweep, Checkpoint, Experiment, ExperimentConfig, RunResult, RunSummary,
    StrategyKind,
};
pub use learner::{BankConfig, DifficultyDistribution, LearnerConfig, LearnerState, ProblemBank};
pub use metrics::{StepMetrics, MetricsRow};
pub use sampler::Sampler;
pub use scheduler::{
    alignment, expected_performance, instantaneous_difficulty, sigmoid, update_competence,
    update_difficulty, CompetenceState, PassRateObservation, ProblemId, ProblemRecord,
};
