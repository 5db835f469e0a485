//! Learned models: transition ensemble, behavior model and the λ-conditioned
//! policy.

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::env::{Action, State, ACTION_DIM, STATE_DIM};
use super::nn::{fit_regression, Activation, Affine, Mlp, Network, SupervisedConfig, Tape};
use super::LionError;
use crate::rng::{derive_seed, Stream};

/// Predicts `(Δstate, reward)` from `(state, action)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionModel {
    pub network: Network,
}

/// Forward pass of a transition model, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct TransitionTape {
    tape: Tape,
    pub delta: State,
    pub reward: f64,
}

impl TransitionModel {
    pub fn predict(&self, s: &State, a: &Action) -> (State, f64) {
        let y = self.network.forward(&[s[0], s[1], a[0], a[1]]);
        ([y[0], y[1]], y[2])
    }

    pub fn tape(&self, s: &State, a: &Action) -> TransitionTape {
        let (tape, y) = self.network.tape(&[s[0], s[1], a[0], a[1]]);
        TransitionTape {
            tape,
            delta: [y[0], y[1]],
            reward: y[2],
        }
    }

    /// Gradients with respect to state and action given output gradients.
    pub fn input_gradient(&self, tape: &TransitionTape, d_delta: &State, d_reward: f64) -> (State, Action) {
        let g = self.network.backward(&tape.tape, &[d_delta[0], d_delta[1], d_reward], None);
        ([g[0], g[1]], [g[2], g[3]])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    /// Number of members K.
    pub members: usize,
    pub model: SupervisedConfig,
    /// Fraction of episodes held out for validation.
    pub holdout_fraction: f64,
    /// Largest acceptable held-out MSE, in standardized output units.
    pub max_heldout_mse: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            members: 4,
            model: SupervisedConfig {
                epochs: 200,
                ..SupervisedConfig::default()
            },
            holdout_fraction: 0.1,
            max_heldout_mse: 0.05,
        }
    }
}

/// Held-out errors of one ensemble member.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub seed: u64,
    pub train_loss: f64,
    pub heldout_state_mse: f64,
    pub heldout_reward_mse: f64,
    pub heldout_standardized_mse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionEnsemble {
    pub members: Vec<TransitionModel>,
}

impl TransitionEnsemble {
    pub fn new(members: Vec<TransitionModel>) -> Result<Self, LionError> {
        if members.len() < 2 {
            return Err(LionError::Config(format!(
                "an ensemble needs at least 2 members, got {}",
                members.len()
            )));
        }
        Ok(Self { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn reward_predictions(&self, s: &State, a: &Action) -> Vec<f64> {
        self.members.iter().map(|m| m.predict(s, a).1).collect()
    }
}

/// Minimum reward prediction across the ensemble.
pub fn pessimistic_reward(ensemble: &TransitionEnsemble, s: &State, a: &Action) -> f64 {
    ensemble
        .reward_predictions(s, a)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Mean squared difference between two actions.
pub fn proximity_penalty(a_beta: &[f64], a_pi: &[f64]) -> Result<f64, LionError> {
    if a_beta.len() != a_pi.len() || a_beta.is_empty() {
        return Err(LionError::Dimension {
            expected: a_beta.len(),
            got: a_pi.len(),
        });
    }
    Ok(a_beta.iter().zip(a_pi).map(|(b, p)| (b - p).powi(2)).sum::<f64>() / a_beta.len() as f64)
}

fn transition_rows(data: &Dataset) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    data.transitions
        .iter()
        .map(|t| {
            (
                vec![t.state[0], t.state[1], t.action[0], t.action[1]],
                vec![
                    t.next_state[0] - t.state[0],
                    t.next_state[1] - t.state[1],
                    t.reward,
                ],
            )
        })
        .unzip()
}

/// Trains one member per seed; seeds must be distinct.
pub fn train_ensemble_with_seeds(
    dataset: &Dataset,
    config: &EnsembleConfig,
    seeds: &[u64],
) -> Result<(TransitionEnsemble, Vec<MemberReport>), LionError> {
    if dataset.is_empty() {
        return Err(LionError::Config("cannot train on an empty dataset".into()));
    }
    if seeds.len() < 2 {
        return Err(LionError::Config(format!(
            "an ensemble needs at least 2 members, got {}",
            seeds.len()
        )));
    }
    for (i, s) in seeds.iter().enumerate() {
        if seeds[..i].contains(s) {
            return Err(LionError::Config(format!("ensemble member seed {s} is used twice")));
        }
    }
    let (train, test) = dataset.split(config.holdout_fraction);
    let (x_train, y_train) = transition_rows(&train);
    let (x_test, y_test) = transition_rows(&test);
    let input = Affine::fit(&x_train);
    let output = Affine::fit(&y_train);

    let mut members = Vec::with_capacity(seeds.len());
    let mut reports = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut rng = Stream::new(seed);
        let mut network = Network::new(Mlp::new(
            STATE_DIM + ACTION_DIM,
            config.model.hidden,
            STATE_DIM + 1,
            Activation::Identity,
            &mut rng,
        ));
        network.input = input.clone();
        network.output = output.clone();
        let train_loss = fit_regression(&mut network, &x_train, &y_train, &config.model, &mut rng);
        let model = TransitionModel { network };
        let report = heldout_report(&model, seed, train_loss, &x_test, &y_test);
        if !(report.heldout_standardized_mse <= config.max_heldout_mse) {
            return Err(LionError::Training(format!(
                "ensemble member (seed {seed}) held-out MSE {:.4} exceeds {}",
                report.heldout_standardized_mse, config.max_heldout_mse
            )));
        }
        members.push(model);
        reports.push(report);
    }
    Ok((TransitionEnsemble::new(members)?, reports))
}

/// Trains `config.members` members with distinct seeds derived from `seed`.
pub fn train_ensemble(
    dataset: &Dataset,
    config: &EnsembleConfig,
    seed: u64,
) -> Result<(TransitionEnsemble, Vec<MemberReport>), LionError> {
    let seeds: Vec<u64> = (0..config.members as u64).map(|k| derive_seed(seed, &[k])).collect();
    train_ensemble_with_seeds(dataset, config, &seeds)
}

fn heldout_report(model: &TransitionModel, seed: u64, train_loss: f64, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> MemberReport {
    let n = xs.len().max(1) as f64;
    let mut state = 0.0;
    let mut reward = 0.0;
    let mut standardized = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let p = model.network.forward(x);
        state += ((p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2)) / 2.0;
        reward += (p[2] - y[2]).powi(2);
        let pn = model.network.output.normalize(&p);
        let yn = model.network.output.normalize(y);
        standardized += pn.iter().zip(&yn).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 3.0;
    }
    MemberReport {
        seed,
        train_loss,
        heldout_state_mse: state / n,
        heldout_reward_mse: reward / n,
        heldout_standardized_mse: standardized / n,
    }
}

/// Learned model β of the behavioral policy; outputs lie in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorModel {
    pub network: Network,
}

impl BehaviorModel {
    pub fn act(&self, s: &State) -> Action {
        let y = self.network.forward(s);
        [y[0], y[1]]
    }

    pub fn tape(&self, s: &State) -> (Tape, Action) {
        let (tape, y) = self.network.tape(s);
        (tape, [y[0], y[1]])
    }

    pub fn input_gradient(&self, tape: &Tape, d_action: &Action) -> State {
        let g = self.network.backward(tape, d_action, None);
        [g[0], g[1]]
    }
}

/// Behavior cloning by regression on the dataset's actions.
pub fn train_behavior(dataset: &Dataset, config: &SupervisedConfig, seed: u64) -> Result<(BehaviorModel, f64), LionError> {
    if dataset.is_empty() {
        return Err(LionError::Config("cannot train on an empty dataset".into()));
    }
    let mut rng = Stream::new(seed);
    let xs: Vec<Vec<f64>> = dataset.transitions.iter().map(|t| t.state.to_vec()).collect();
    let ys: Vec<Vec<f64>> = dataset.transitions.iter().map(|t| t.action.to_vec()).collect();
    let mut network = Network::new(Mlp::new(STATE_DIM, config.hidden, ACTION_DIM, Activation::Tanh, &mut rng));
    network.input = Affine::fit(&xs);
    let loss = fit_regression(&mut network, &xs, &ys, config, &mut rng);
    if !loss.is_finite() {
        return Err(LionError::Training("behavior cloning diverged".into()));
    }
    Ok((BehaviorModel { network }, loss))
}

/// The trade-off conditioned policy `π(s, λ)`; outputs lie in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionedPolicy {
    pub network: Network,
}

impl ConditionedPolicy {
    /// Fresh policy whose state inputs are standardized by `state_norm`;
    /// λ enters unscaled.
    pub fn new(hidden: usize, state_norm: &Affine, rng: &mut Stream) -> Self {
        let mut network = Network::new(Mlp::new(STATE_DIM + 1, hidden, ACTION_DIM, Activation::Tanh, rng));
        network.input = Affine {
            shift: vec![state_norm.shift[0], state_norm.shift[1], 0.0],
            scale: vec![state_norm.scale[0], state_norm.scale[1], 1.0],
        };
        Self { network }
    }

    pub fn act(&self, s: &State, lambda: f64) -> Action {
        let y = self.network.forward(&[s[0], s[1], lambda]);
        [y[0], y[1]]
    }

    pub fn tape(&self, s: &State, lambda: f64) -> (Tape, Action) {
        let (tape, y) = self.network.tape(&[s[0], s[1], lambda]);
        (tape, [y[0], y[1]])
    }

    /// Accumulates parameter gradients and returns the state gradient.
    pub fn backward(&self, tape: &Tape, d_action: &Action, grad_params: &mut [f64]) -> State {
        let g = self.network.backward(tape, d_action, Some(grad_params));
        [g[0], g[1]]
    }

    pub fn params(&self) -> &[f64] {
        self.network.mlp.params()
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        self.network.mlp.params_mut()
    }
}
