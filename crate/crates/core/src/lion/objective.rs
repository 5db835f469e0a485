//! The trade-off objective and its gradient by backpropagation through time.
//!
//! For each start state `s_0` and trade-off `λ`, the policy is rolled out
//! through the learned ensemble for `H` transitions and scored as
//!
//! ```text
//! J = Σ_{t=0..H} γ^t [ λ · e(s_t, π(s_t, λ)) − (1 − λ) · p(β(s_t), π(s_t, λ)) ]
//! ```
//!
//! where `e` is the minimum reward prediction over all members and `p` the
//! mean squared action difference to the behavior model. Each transition
//! uses the member chosen for that step by the [`RolloutPlan`]. The reported
//! value and gradient are means over rollouts.

use rand_distr::{Beta, Distribution};

use super::env::{State, ACTION_DIM};
use super::models::{BehaviorModel, ConditionedPolicy, TransitionEnsemble, TransitionTape};
use super::nn::Tape;
use super::LionError;
use crate::rng::Stream;

/// Draws `n` trade-off values from `Beta(a, b)`.
pub fn sample_tradeoffs(a: f64, b: f64, n: usize, rng: &mut Stream) -> Result<Vec<f64>, LionError> {
    let beta = Beta::new(a, b).map_err(|e| LionError::Config(format!("Beta({a}, {b}): {e}")))?;
    Ok((0..n).map(|_| beta.sample(rng)).collect())
}

/// Start states, per-rollout trade-offs and per-step ensemble members.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutPlan {
    pub starts: Vec<State>,
    pub lambdas: Vec<f64>,
    /// `members[r][t]` is the member driving transition `t` of rollout `r`.
    pub members: Vec<Vec<usize>>,
}

impl RolloutPlan {
    /// Samples `count` start states from `states`, λ from `Beta(a, b)` and
    /// uniform members.
    pub fn sample(
        states: &[State],
        count: usize,
        (a, b): (f64, f64),
        horizon: usize,
        ensemble_size: usize,
        rng: &mut Stream,
    ) -> Result<Self, LionError> {
        if states.is_empty() {
            return Err(LionError::Config("no start states to sample from".into()));
        }
        let starts: Vec<State> = (0..count).map(|_| states[rng.index(states.len())]).collect();
        let lambdas = sample_tradeoffs(a, b, count, rng)?;
        let members = Self::draw_members(count, horizon, ensemble_size, rng);
        Ok(Self {
            starts,
            lambdas,
            members,
        })
    }

    /// Every rollout uses the same fixed `lambda`.
    pub fn fixed(starts: Vec<State>, lambda: f64, horizon: usize, ensemble_size: usize, rng: &mut Stream) -> Self {
        let count = starts.len();
        Self {
            lambdas: vec![lambda; count],
            members: Self::draw_members(count, horizon, ensemble_size, rng),
            starts,
        }
    }

    fn draw_members(count: usize, horizon: usize, k: usize, rng: &mut Stream) -> Vec<Vec<usize>> {
        (0..count).map(|_| (0..horizon).map(|_| rng.index(k)).collect()).collect()
    }

    fn check(&self, horizon: usize, k: usize) -> Result<(), LionError> {
        if horizon == 0 {
            return Err(LionError::Config("rollout horizon must be at least 1".into()));
        }
        if self.starts.is_empty() || self.starts.len() != self.lambdas.len() || self.starts.len() != self.members.len() {
            return Err(LionError::Config("rollout plan fields have mismatched lengths".into()));
        }
        if self.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(LionError::Config("rollout trade-offs must lie in [0, 1]".into()));
        }
        if self.members.iter().any(|m| m.len() < horizon || m.iter().any(|&i| i >= k)) {
            return Err(LionError::Config("rollout member schedule does not fit the ensemble".into()));
        }
        Ok(())
    }
}

/// Objective value, its two weighted components and the policy gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    /// Mean of `Σ γ^t λ e_t`.
    pub reward_term: f64,
    /// Mean of `Σ γ^t (1 − λ) p_t`; `value = reward_term − penalty_term`.
    pub penalty_term: f64,
    pub gradient: Vec<f64>,
}

struct StepTape {
    policy: Tape,
    action: [f64; ACTION_DIM],
    behavior: Tape,
    behavior_action: [f64; ACTION_DIM],
    members: Vec<TransitionTape>,
    pessimist: usize,
    discount: f64,
}

fn finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

/// Mean objective over the plan's rollouts and its gradient with respect to
/// the policy parameters.
pub fn lion_objective(
    policy: &ConditionedPolicy,
    ensemble: &TransitionEnsemble,
    behavior: &BehaviorModel,
    plan: &RolloutPlan,
    horizon: usize,
    gamma: f64,
) -> Result<ObjectiveValue, LionError> {
    plan.check(horizon, ensemble.len())?;
    let mut gradient = vec![0.0; policy.params().len()];
    let mut reward_term = 0.0;
    let mut penalty_term = 0.0;
    let mut steps: Vec<StepTape> = Vec::with_capacity(horizon + 1);

    for (r, (&start, &lambda)) in plan.starts.iter().zip(&plan.lambdas).enumerate() {
        steps.clear();
        let mut s = start;
        let mut discount = 1.0;
        for t in 0..=horizon {
            let (policy_tape, action) = policy.tape(&s, lambda);
            let (behavior_tape, behavior_action) = behavior.tape(&s);
            let members: Vec<TransitionTape> = ensemble.members.iter().map(|m| m.tape(&s, &action)).collect();
            let mut pessimist = 0;
            for (k, m) in members.iter().enumerate() {
                if m.reward < members[pessimist].reward {
                    pessimist = k;
                }
            }
            let e = members[pessimist].reward;
            let p = behavior_action
                .iter()
                .zip(&action)
                .map(|(b, a)| (b - a).powi(2))
                .sum::<f64>()
                / ACTION_DIM as f64;
            if !finite(&[e, p]) {
                return Err(LionError::Diverged(format!("non-finite reward or penalty in rollout {r}, step {t}")));
            }
            if lambda != 0.0 {
                reward_term += discount * lambda * e;
            }
            if lambda != 1.0 {
                penalty_term += discount * (1.0 - lambda) * p;
            }
            if t < horizon {
                let delta = members[plan.members[r][t]].delta;
                s = [s[0] + delta[0], s[1] + delta[1]];
                if !finite(&s) {
                    return Err(LionError::Diverged(format!("surrogate state diverged in rollout {r}, step {t}")));
                }
            }
            steps.push(StepTape {
                policy: policy_tape,
                action,
                behavior: behavior_tape,
                behavior_action,
                members,
                pessimist,
                discount,
            });
            discount *= gamma;
        }

        // Backward pass; `next` holds dJ/ds_{t+1}.
        let mut next: State = [0.0; 2];
        for t in (0..=horizon).rev() {
            let st = &steps[t];
            let mut d_state: State = [0.0; 2];
            let mut d_action = [0.0; ACTION_DIM];

            if t < horizon {
                let m = plan.members[r][t];
                let (ds, da) = ensemble.members[m].input_gradient(&st.members[m], &next, 0.0);
                for i in 0..2 {
                    d_state[i] += next[i] + ds[i];
                    d_action[i] += da[i];
                }
            }
            let reward_weight = st.discount * lambda;
            if reward_weight != 0.0 {
                let k = st.pessimist;
                let (ds, da) = ensemble.members[k].input_gradient(&st.members[k], &[0.0, 0.0], reward_weight);
                for i in 0..2 {
                    d_state[i] += ds[i];
                    d_action[i] += da[i];
                }
            }
            let penalty_weight = st.discount * (1.0 - lambda);
            if penalty_weight != 0.0 {
                let c = -penalty_weight * 2.0 / ACTION_DIM as f64;
                let mut d_behavior = [0.0; ACTION_DIM];
                for i in 0..ACTION_DIM {
                    let diff = st.action[i] - st.behavior_action[i];
                    d_action[i] += c * diff;
                    d_behavior[i] = -c * diff;
                }
                let ds = behavior.input_gradient(&st.behavior, &d_behavior);
                for i in 0..2 {
                    d_state[i] += ds[i];
                }
            }
            let ds = policy.backward(&st.policy, &d_action, &mut gradient);
            for i in 0..2 {
                d_state[i] += ds[i];
            }
            next = d_state;
        }
    }

    let n = plan.starts.len() as f64;
    gradient.iter_mut().for_each(|g| *g /= n);
    if !finite(&gradient) {
        return Err(LionError::Diverged("non-finite policy gradient".into()));
    }
    let reward_term = reward_term / n;
    let penalty_term = penalty_term / n;
    Ok(ObjectiveValue {
        value: reward_term - penalty_term,
        reward_term,
        penalty_term,
        gradient,
    })
}
