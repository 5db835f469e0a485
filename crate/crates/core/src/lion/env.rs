//! Two-dimensional linear control task and its three behavioral policies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rng::Stream;

pub const STATE_DIM: usize = 2;
pub const ACTION_DIM: usize = 2;

pub type State = [f64; STATE_DIM];
pub type Action = [f64; ACTION_DIM];

/// `s' = decay * s + gain * clamp(a) + noise`,
/// `r = -|s - target|^2 - 0.01 |clamp(a)|^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyEnv {
    pub decay: f64,
    pub gain: f64,
    pub target: State,
    pub noise: f64,
    pub horizon: usize,
    /// Discount for reported returns; 1 gives plain sums.
    pub gamma: f64,
}

impl Default for ToyEnv {
    fn default() -> Self {
        Self {
            decay: 0.9,
            gain: 0.5,
            target: [0.0, 0.0],
            noise: 0.02,
            horizon: 20,
            gamma: 1.0,
        }
    }
}

pub const ACTION_COST: f64 = 0.01;

pub fn clamp_action(a: &Action) -> Action {
    [a[0].clamp(-1.0, 1.0), a[1].clamp(-1.0, 1.0)]
}

impl ToyEnv {
    pub fn reward(&self, s: &State, a: &Action) -> f64 {
        let a = clamp_action(a);
        let dist: f64 = s.iter().zip(&self.target).map(|(x, g)| (x - g).powi(2)).sum();
        let effort: f64 = a.iter().map(|u| u * u).sum();
        -dist - ACTION_COST * effort
    }

    /// Start states are uniform on `[-1, 1]^2`.
    pub fn initial_state(&self, rng: &mut Stream) -> State {
        [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)]
    }

    /// Discounted return of one episode under `policy`.
    pub fn episode_return(&self, mut policy: impl FnMut(&State) -> Action, rng: &mut Stream) -> f64 {
        let mut s = self.initial_state(rng);
        let mut total = 0.0;
        let mut discount = 1.0;
        for _ in 0..self.horizon {
            let a = policy(&s);
            let (next, r) = env_step(self, &s, &a, rng);
            total += discount * r;
            discount *= self.gamma;
            s = next;
        }
        total
    }
}

/// Advances the environment one step.
pub fn env_step(env: &ToyEnv, s: &State, a: &Action, rng: &mut Stream) -> (State, f64) {
    let u = clamp_action(a);
    let r = env.reward(s, &u);
    let mut next = [0.0; STATE_DIM];
    for i in 0..STATE_DIM {
        next[i] = env.decay * s[i] + env.gain * u[i];
        if env.noise > 0.0 {
            next[i] += env.noise * rng.normal();
        }
    }
    (next, r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehavioralKind {
    Bad,
    Mediocre,
    Optimized,
}

impl BehavioralKind {
    pub const ALL: [BehavioralKind; 3] = [BehavioralKind::Bad, BehavioralKind::Mediocre, BehavioralKind::Optimized];

    pub fn as_str(self) -> &'static str {
        match self {
            BehavioralKind::Bad => "bad",
            BehavioralKind::Mediocre => "mediocre",
            BehavioralKind::Optimized => "optimized",
        }
    }
}

impl fmt::Display for BehavioralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BehavioralKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BehavioralKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown behavioral policy `{s}`"))
    }
}

/// Deterministic proportional law `a = clamp(gain * (s - target) + bias)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BehavioralPolicy {
    pub kind: BehavioralKind,
    pub gain: f64,
    pub bias: Action,
    pub target: State,
}

impl BehavioralPolicy {
    pub fn act(&self, s: &State) -> Action {
        let mut a = [0.0; ACTION_DIM];
        for i in 0..ACTION_DIM {
            a[i] = self.gain * (s[i] - self.target[i]) + self.bias[i];
        }
        clamp_action(&a)
    }
}

/// The three baseline controllers for `env`.
///
/// `Optimized` nearly cancels the decay in one step, `Mediocre` corrects
/// weakly, and `Bad` barely corrects while pushing a constant offset.
pub fn make_behavioral(env: &ToyEnv, kind: BehavioralKind) -> BehavioralPolicy {
    let (gain, bias) = match kind {
        BehavioralKind::Optimized => (-1.6, [0.0, 0.0]),
        BehavioralKind::Mediocre => (-0.4, [0.0, 0.0]),
        BehavioralKind::Bad => (-0.05, [0.2, -0.2]),
    };
    BehavioralPolicy {
        kind,
        gain,
        bias,
        target: env.target,
    }
}
