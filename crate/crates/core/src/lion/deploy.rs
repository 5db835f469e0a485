//! Trained policies as λ landscapes.

use super::env::{State, ToyEnv};
use super::models::{proximity_penalty, BehaviorModel, ConditionedPolicy};
use crate::landscape::{Landscape, TradeOff};
use crate::rng::Stream;

/// `λ ↦` true-environment return of `π(·, λ)`.
///
/// One landscape episode is the mean of `episodes_per_eval` environment
/// episodes. When a behavior model and probe states are attached, the
/// landscape also reports the proximity `mean p(β(s), π(s, λ))`.
#[derive(Clone, Debug)]
pub struct PolicyLandscape {
    env: ToyEnv,
    policy: ConditionedPolicy,
    episodes_per_eval: usize,
    proximity: Option<(BehaviorModel, Vec<State>)>,
}

pub fn policy_landscape(env: ToyEnv, policy: ConditionedPolicy, episodes_per_eval: usize) -> PolicyLandscape {
    PolicyLandscape {
        env,
        policy,
        episodes_per_eval: episodes_per_eval.max(1),
        proximity: None,
    }
}

impl PolicyLandscape {
    pub fn with_proximity(mut self, behavior: BehaviorModel, probes: Vec<State>) -> Self {
        self.proximity = Some((behavior, probes));
        self
    }

    pub fn policy(&self) -> &ConditionedPolicy {
        &self.policy
    }

    pub fn env(&self) -> &ToyEnv {
        &self.env
    }
}

/// Mean proximity penalty between β and `π(·, λ)` over `states`.
pub fn mean_proximity(policy: &ConditionedPolicy, behavior: &BehaviorModel, states: &[State], lambda: f64) -> f64 {
    let total: f64 = states
        .iter()
        .map(|s| proximity_penalty(&behavior.act(s), &policy.act(s, lambda)).expect("actions share a dimension"))
        .sum();
    total / states.len().max(1) as f64
}

impl Landscape for PolicyLandscape {
    fn episode(&self, lambda: TradeOff, rng: &mut Stream) -> f64 {
        let l = lambda.value();
        let total: f64 = (0..self.episodes_per_eval)
            .map(|_| self.env.episode_return(|s| self.policy.act(s, l), rng))
            .sum();
        total / self.episodes_per_eval as f64
    }

    fn proximity(&self, lambda: TradeOff) -> Option<f64> {
        self.proximity
            .as_ref()
            .map(|(behavior, probes)| mean_proximity(&self.policy, behavior, probes, lambda.value()))
    }
}
