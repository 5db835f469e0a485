//! A desk-scale pipeline for λ-conditioned offline policies.
//!
//! 1. [`generate_dataset`] records ε-greedy rollouts of a behavioral
//!    controller on the [`ToyEnv`].
//! 2. [`train_ensemble`] fits K feed-forward transition models; their minimum
//!    reward prediction is the pessimistic reward.
//! 3. [`train_behavior`] clones the behavioral policy.
//! 4. [`train_policy`] trains `π(s, λ)` on model rollouts, with λ drawn from
//!    a Beta distribution per start state, by backpropagation through time.
//! 5. [`policy_landscape`] deploys the policy as a [`crate::landscape::Landscape`].
//!
//! [`train_lion`] runs all five steps from a single [`LionConfig`].

pub mod checkpoint;
pub mod dataset;
mod deploy;
pub mod env;
pub mod models;
pub mod nn;
pub mod objective;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{generate_dataset, Dataset, Provenance, Transition};
pub use deploy::{mean_proximity, policy_landscape, PolicyLandscape};
pub use env::{env_step, make_behavioral, Action, BehavioralKind, BehavioralPolicy, State, ToyEnv};
pub use models::{
    pessimistic_reward, proximity_penalty, train_behavior, train_ensemble, train_ensemble_with_seeds, BehaviorModel,
    ConditionedPolicy, EnsembleConfig, MemberReport, TransitionEnsemble, TransitionModel,
};
pub use nn::SupervisedConfig;
pub use objective::{lion_objective, sample_tradeoffs, ObjectiveValue, RolloutPlan};
pub use train::{train_policy, LionTrainConfig, TrainingLog};

use crate::rng::{derive_seed, Stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LionError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("surrogate diverged: {0}")]
    Diverged(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("malformed file: {0}")]
    Format(String),
}

/// Everything needed to train one λ-conditioned policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LionConfig {
    pub env: ToyEnv,
    pub behavioral: BehavioralKind,
    pub epsilon: f64,
    pub dataset_episodes: usize,
    pub ensemble: EnsembleConfig,
    pub behavior: SupervisedConfig,
    pub policy: LionTrainConfig,
    /// Environment episodes averaged into one landscape episode.
    pub episodes_per_eval: usize,
    pub seed: u64,
}

impl Default for LionConfig {
    fn default() -> Self {
        Self {
            env: ToyEnv::default(),
            behavioral: BehavioralKind::Mediocre,
            epsilon: 0.2,
            dataset_episodes: 100,
            ensemble: EnsembleConfig::default(),
            behavior: SupervisedConfig::default(),
            policy: LionTrainConfig::default(),
            episodes_per_eval: 1,
            seed: 0,
        }
    }
}

/// Fraction of dataset episodes held out from behavior cloning and policy
/// training.
pub const HOLDOUT_FRACTION: f64 = 0.1;

/// Output of [`train_lion`].
#[derive(Clone, Debug, PartialEq)]
pub struct LionArtifacts {
    pub config: LionConfig,
    pub ensemble: TransitionEnsemble,
    pub member_reports: Vec<MemberReport>,
    pub behavior: BehaviorModel,
    pub policy: ConditionedPolicy,
    pub log: TrainingLog,
    /// States from held-out episodes; used for cloning checks and proximity.
    pub heldout_states: Vec<State>,
}

impl LionArtifacts {
    /// Deploys the policy as a landscape with proximity reporting.
    pub fn landscape(&self) -> PolicyLandscape {
        policy_landscape(self.config.env, self.policy.clone(), self.config.episodes_per_eval)
            .with_proximity(self.behavior.clone(), self.heldout_states.clone())
    }

    /// Proximity to the behavior model on held-out states.
    pub fn proximity(&self, lambda: f64) -> f64 {
        mean_proximity(&self.policy, &self.behavior, &self.heldout_states, lambda)
    }
}

/// Dataset generation, ensemble, behavior model and policy training.
pub fn train_lion(config: &LionConfig) -> Result<LionArtifacts, LionError> {
    config.policy.validate()?;
    let seed = config.seed;
    let dataset = generate_dataset(
        &config.env,
        config.behavioral,
        config.epsilon,
        config.dataset_episodes,
        &mut Stream::derived(seed, &[1]),
    )?;
    let (train, heldout) = dataset.split(HOLDOUT_FRACTION);
    let (ensemble, member_reports) = train_ensemble(&dataset, &config.ensemble, derive_seed(seed, &[2]))?;
    let (behavior, _) = train_behavior(&train, &config.behavior, derive_seed(seed, &[3]))?;
    let (policy, log) = train_policy(&train, &ensemble, &behavior, &config.policy, derive_seed(seed, &[4]))?;
    Ok(LionArtifacts {
        config: config.clone(),
        ensemble,
        member_reports,
        behavior,
        policy,
        log,
        heldout_states: heldout.states(),
    })
}
