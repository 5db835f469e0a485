//! Offline datasets from ε-greedy behavioral policies.
//!
//! # File format
//!
//! Line oriented text. The first line is the magic `tradeoff-dataset 1`,
//! followed by `#`-prefixed `key=value` provenance lines:
//!
//! ```text
//! tradeoff-dataset 1
//! # behavioral=mediocre
//! # epsilon=0.2
//! # episodes=100
//! # horizon=20
//! # seed=17
//! episode step s0 s1 a0 a1 r next0 next1 explored
//! 0 0 0.13 -0.52 -0.05 0.2 -0.29 0.09 -0.37 0
//! ```
//!
//! Every following line is one transition, space separated, with floats in
//! shortest round-trip form.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::env::{clamp_action, env_step, make_behavioral, Action, BehavioralKind, State, ToyEnv};
use super::LionError;
use crate::rng::Stream;

const MAGIC: &str = "tradeoff-dataset 1";
const COLUMNS: &str = "episode step s0 s1 a0 a1 r next0 next1 explored";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub behavioral: BehavioralKind,
    pub epsilon: f64,
    pub episodes: usize,
    pub horizon: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub episode: usize,
    pub step: usize,
    pub state: State,
    pub action: Action,
    pub reward: f64,
    pub next_state: State,
    /// The action was drawn uniformly instead of taken from the policy.
    pub explored: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub provenance: Provenance,
    pub transitions: Vec<Transition>,
}

/// Rolls out `episodes` episodes of the ε-greedy behavioral policy.
pub fn generate_dataset(
    env: &ToyEnv,
    kind: BehavioralKind,
    epsilon: f64,
    episodes: usize,
    rng: &mut Stream,
) -> Result<Dataset, LionError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(LionError::Config(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    let policy = make_behavioral(env, kind);
    let seed = rng.seed();
    let mut transitions = Vec::with_capacity(episodes * env.horizon);
    for episode in 0..episodes {
        let mut s = env.initial_state(rng);
        for step in 0..env.horizon {
            let explored = rng.uniform() < epsilon;
            let action = if explored {
                [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)]
            } else {
                policy.act(&s)
            };
            let action = clamp_action(&action);
            let (next_state, reward) = env_step(env, &s, &action, rng);
            transitions.push(Transition {
                episode,
                step,
                state: s,
                action,
                reward,
                next_state,
                explored,
            });
            s = next_state;
        }
    }
    Ok(Dataset {
        provenance: Provenance {
            behavioral: kind,
            epsilon,
            episodes,
            horizon: env.horizon,
            seed,
        },
        transitions,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn states(&self) -> Vec<State> {
        self.transitions.iter().map(|t| t.state).collect()
    }

    /// Splits whole episodes: the last `fraction` of episodes is held out.
    pub fn split(&self, fraction: f64) -> (Dataset, Dataset) {
        let episodes = self.transitions.iter().map(|t| t.episode).max().map_or(0, |e| e + 1);
        let held = if episodes < 2 {
            0
        } else {
            ((episodes as f64 * fraction).round() as usize).clamp(1, episodes - 1)
        };
        let cut = episodes - held;
        let (train, test): (Vec<_>, Vec<_>) = self.transitions.iter().partition(|t| t.episode < cut);
        (
            Dataset {
                provenance: self.provenance,
                transitions: train,
            },
            Dataset {
                provenance: self.provenance,
                transitions: test,
            },
        )
    }

    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        let p = &self.provenance;
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "# behavioral={}", p.behavioral)?;
        writeln!(out, "# epsilon={}", p.epsilon)?;
        writeln!(out, "# episodes={}", p.episodes)?;
        writeln!(out, "# horizon={}", p.horizon)?;
        writeln!(out, "# seed={}", p.seed)?;
        writeln!(out, "{COLUMNS}")?;
        for t in &self.transitions {
            writeln!(
                out,
                "{} {} {} {} {} {} {} {} {} {}",
                t.episode,
                t.step,
                t.state[0],
                t.state[1],
                t.action[0],
                t.action[1],
                t.reward,
                t.next_state[0],
                t.next_state[1],
                u8::from(t.explored)
            )?;
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> Result<Self, LionError> {
        let bad = |line: usize, msg: &str| LionError::Format(format!("dataset line {line}: {msg}"));
        let mut fields = std::collections::BTreeMap::new();
        let mut transitions = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let n = i + 1;
            let line = line.map_err(|e| LionError::Format(e.to_string()))?;
            let line = line.trim();
            if n == 1 {
                if line != MAGIC {
                    return Err(bad(1, "missing `tradeoff-dataset 1` header"));
                }
                continue;
            }
            if line.is_empty() || line == COLUMNS {
                continue;
            }
            if let Some(kv) = line.strip_prefix('#') {
                let (k, v) = kv.trim().split_once('=').ok_or_else(|| bad(n, "expected key=value"))?;
                fields.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 10 {
                return Err(bad(n, "expected 10 columns"));
            }
            let f = |i: usize| cols[i].parse::<f64>().map_err(|_| bad(n, "malformed number"));
            let u = |i: usize| cols[i].parse::<usize>().map_err(|_| bad(n, "malformed integer"));
            transitions.push(Transition {
                episode: u(0)?,
                step: u(1)?,
                state: [f(2)?, f(3)?],
                action: [f(4)?, f(5)?],
                reward: f(6)?,
                next_state: [f(7)?, f(8)?],
                explored: u(9)? != 0,
            });
        }
        if fields.is_empty() && transitions.is_empty() {
            return Err(bad(1, "missing `tradeoff-dataset 1` header"));
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| LionError::Format(format!("dataset header lacks `{k}`")));
        let parse_err = |k: &str| LionError::Format(format!("dataset header `{k}` is malformed"));
        let provenance = Provenance {
            behavioral: get("behavioral")?.parse().map_err(|_| parse_err("behavioral"))?,
            epsilon: get("epsilon")?.parse().map_err(|_| parse_err("epsilon"))?,
            episodes: get("episodes")?.parse().map_err(|_| parse_err("episodes"))?,
            horizon: get("horizon")?.parse().map_err(|_| parse_err("horizon"))?,
            seed: get("seed")?.parse().map_err(|_| parse_err("seed"))?,
        };
        Ok(Dataset {
            provenance,
            transitions,
        })
    }
}
