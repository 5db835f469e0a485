//! Differential evolution (rand/1/bin) on `[0, 1]`.

use serde::{Deserialize, Serialize};

use super::{argmax_lambda, Evaluation, Flow};
use crate::rng::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeParams {
    pub population: usize,
    /// Differential weight F.
    pub mutation: f64,
    /// Crossover rate CR.
    pub crossover: f64,
}

impl Default for DeParams {
    fn default() -> Self {
        Self {
            population: 8,
            mutation: 0.5,
            crossover: 0.9,
        }
    }
}

impl DeParams {
    pub(crate) fn validate(&self) -> Result<(), String> {
        // rand/1 needs three distinct donors besides the target.
        if self.population < 4 {
            return Err(format!("population must be at least 4, got {}", self.population));
        }
        if !(self.mutation > 0.0 && self.mutation <= 2.0) {
            return Err(format!("mutation must lie in (0, 2], got {}", self.mutation));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(format!("crossover must lie in [0, 1], got {}", self.crossover));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Member {
    pub position: f64,
    pub value: f64,
}

/// Picks `count` distinct indices from `0..n`, all different from `exclude`.
fn distinct_donors(n: usize, exclude: usize, count: usize, rng: &mut Stream) -> Vec<usize> {
    let mut picked = Vec::with_capacity(count);
    while picked.len() < count {
        let r = rng.index(n);
        if r != exclude && !picked.contains(&r) {
            picked.push(r);
        }
    }
    picked
}

/// Builds one trial point per member: rand/1 mutation, binomial crossover,
/// then clamping to `[0, 1]`.
///
/// In one dimension the forced crossover index always selects the mutant
/// coordinate, so CR only consumes its draw.
pub fn de_step(population: &[Member], params: &DeParams, rng: &mut Stream) -> Vec<f64> {
    const DIM: usize = 1;
    (0..population.len())
        .map(|i| {
            let d = distinct_donors(population.len(), i, 3, rng);
            let mutant = population[d[0]].position
                + params.mutation * (population[d[1]].position - population[d[2]].position);
            let forced = rng.index(DIM);
            let take_mutant = rng.uniform() < params.crossover || forced == 0;
            let trial = if take_mutant { mutant } else { population[i].position };
            trial.clamp(0.0, 1.0)
        })
        .collect()
}

/// Greedy selection: the trial replaces the target unless it scores worse.
pub fn de_select(target: &mut Member, trial: Member) {
    if trial.value >= target.value {
        *target = trial;
    }
}

#[derive(Clone, Debug)]
enum Phase {
    Initial,
    Generation(Vec<f64>),
}

#[derive(Clone, Debug)]
pub(crate) struct Evolution {
    params: DeParams,
    members: Vec<Member>,
    phase: Phase,
    cursor: usize,
}

impl Evolution {
    /// Stratified initialization: one uniform point per cell of width 1/NP.
    pub(crate) fn new(params: DeParams, rng: &mut Stream) -> Self {
        let n = params.population as f64;
        let members = (0..params.population)
            .map(|i| Member {
                position: ((i as f64 + rng.uniform()) / n).min(1.0),
                value: f64::NEG_INFINITY,
            })
            .collect();
        Self {
            params,
            members,
            phase: Phase::Initial,
            cursor: 0,
        }
    }

    pub(crate) fn propose(&self) -> f64 {
        match &self.phase {
            Phase::Initial => self.members[self.cursor].position,
            Phase::Generation(trials) => trials[self.cursor],
        }
    }

    pub(crate) fn observe(&mut self, lambda: f64, value: f64, rng: &mut Stream) -> Flow {
        let candidate = Member {
            position: lambda,
            value,
        };
        match self.phase {
            Phase::Initial => self.members[self.cursor] = candidate,
            Phase::Generation(_) => de_select(&mut self.members[self.cursor], candidate),
        }
        self.cursor += 1;
        if self.cursor == self.members.len() {
            self.cursor = 0;
            self.phase = Phase::Generation(de_step(&self.members, &self.params, rng));
        }
        Flow::Continue
    }

    pub(crate) fn recommend(&self, trace: &[Evaluation]) -> f64 {
        argmax_lambda(trace)
    }

    #[cfg(test)]
    pub(crate) fn members(&self) -> &[Member] {
        &self.members
    }
}
