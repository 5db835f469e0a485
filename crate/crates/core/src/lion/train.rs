//! Policy training by gradient ascent on the trade-off objective.

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::models::{BehaviorModel, ConditionedPolicy, TransitionEnsemble};
use super::nn::{Affine, Momentum};
use super::objective::{lion_objective, RolloutPlan};
use super::LionError;
use crate::rng::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LionTrainConfig {
    /// Shape parameters of the Beta distribution λ is drawn from.
    pub beta_a: f64,
    pub beta_b: f64,
    /// Rollout horizon H (number of model transitions).
    pub horizon: usize,
    pub gamma: f64,
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub iterations: usize,
    pub minibatch: usize,
    /// Gradients longer than this are rescaled to it.
    pub max_grad_norm: f64,
    /// Rollouts in the fixed batch used to compare start and end objectives.
    pub eval_rollouts: usize,
}

impl Default for LionTrainConfig {
    fn default() -> Self {
        Self {
            beta_a: 0.5,
            beta_b: 0.5,
            horizon: 10,
            gamma: 0.99,
            hidden: 32,
            learning_rate: 0.03,
            momentum: 0.9,
            iterations: 3000,
            minibatch: 64,
            max_grad_norm: 5.0,
            eval_rollouts: 256,
        }
    }
}

impl LionTrainConfig {
    pub fn validate(&self) -> Result<(), LionError> {
        let fail = |m: String| Err(LionError::Config(m));
        if !(self.beta_a > 0.0 && self.beta_b > 0.0) {
            return fail(format!("Beta parameters must be positive, got ({}, {})", self.beta_a, self.beta_b));
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if self.hidden == 0 || self.minibatch == 0 || self.eval_rollouts == 0 {
            return fail("hidden, minibatch and eval_rollouts must be positive".into());
        }
        Ok(())
    }
}

/// Objective values recorded during training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    /// Minibatch objective at each iteration.
    pub objective: Vec<f64>,
    /// Objective on the fixed evaluation batch before and after training.
    pub initial_eval: f64,
    pub final_eval: f64,
}

/// Maximizes the objective with momentum SGD, λ drawn per start state.
pub fn train_policy(
    dataset: &Dataset,
    ensemble: &TransitionEnsemble,
    behavior: &BehaviorModel,
    config: &LionTrainConfig,
    seed: u64,
) -> Result<(ConditionedPolicy, TrainingLog), LionError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(LionError::Config("cannot train on an empty dataset".into()));
    }
    let mut rng = Stream::new(seed);
    let states = dataset.states();
    let rows: Vec<Vec<f64>> = states.iter().map(|s| s.to_vec()).collect();
    let mut policy = ConditionedPolicy::new(config.hidden, &Affine::fit(&rows), &mut rng);
    let shape = (config.beta_a, config.beta_b);
    let k = ensemble.len();
    let eval_plan = RolloutPlan::sample(&states, config.eval_rollouts, shape, config.horizon, k, &mut rng)?;
    let evaluate = |p: &ConditionedPolicy| lion_objective(p, ensemble, behavior, &eval_plan, config.horizon, config.gamma);
    let initial_eval = evaluate(&policy)?.value;

    let mut opt = Momentum::new(policy.params().len(), config.learning_rate, config.momentum);
    let mut log = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        let plan = RolloutPlan::sample(&states, config.minibatch, shape, config.horizon, k, &mut rng)?;
        let out = lion_objective(&policy, ensemble, behavior, &plan, config.horizon, config.gamma)
            .map_err(|e| LionError::Diverged(format!("iteration {iteration}: {e}")))?;
        let mut grad = out.gradient;
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > config.max_grad_norm {
            grad.iter_mut().for_each(|g| *g *= config.max_grad_norm / norm);
        }
        opt.apply(policy.params_mut(), &grad);
        log.push(out.value);
    }
    let final_eval = evaluate(&policy)?.value;
    Ok((
        policy,
        TrainingLog {
            objective: log,
            initial_eval,
            final_eval,
        },
    ))
}
