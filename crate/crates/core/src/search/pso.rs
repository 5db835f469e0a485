//! Inertia-weight particle swarm on `[0, 1]`.

use serde::{Deserialize, Serialize};

use super::{argmax_lambda, Evaluation, Flow};
use crate::rng::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoParams {
    pub particles: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub velocity_clamp: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            particles: 5,
            inertia: 0.7298,
            cognitive: 1.49618,
            social: 1.49618,
            velocity_clamp: 0.5,
        }
    }
}

impl PsoParams {
    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.particles < 2 {
            return Err(format!("particles must be at least 2, got {}", self.particles));
        }
        if !(0.0..1.0).contains(&self.inertia) {
            return Err(format!("inertia must lie in [0, 1), got {}", self.inertia));
        }
        for (name, c) in [("cognitive", self.cognitive), ("social", self.social)] {
            if !(c.is_finite() && c >= 0.0) {
                return Err(format!("{name} coefficient must be non-negative, got {c}"));
            }
        }
        if !(self.velocity_clamp > 0.0 && self.velocity_clamp <= 1.0) {
            return Err(format!("velocity_clamp must lie in (0, 1], got {}", self.velocity_clamp));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    pub position: f64,
    pub velocity: f64,
    pub best_position: f64,
    pub best_value: f64,
}

/// One velocity/position update with explicit uniform draws `r1`, `r2`.
///
/// The velocity is clamped to `±velocity_clamp`; positions leaving `[0, 1]`
/// are reflected back and their velocity reversed.
pub fn pso_update(particle: &mut Particle, global_best: f64, params: &PsoParams, r1: f64, r2: f64) {
    let v = params.inertia * particle.velocity
        + params.cognitive * r1 * (particle.best_position - particle.position)
        + params.social * r2 * (global_best - particle.position);
    let mut v = v.clamp(-params.velocity_clamp, params.velocity_clamp);
    let mut x = particle.position + v;
    if x < 0.0 {
        x = -x;
        v = -v;
    } else if x > 1.0 {
        x = 2.0 - x;
        v = -v;
    }
    particle.position = x.clamp(0.0, 1.0);
    particle.velocity = v;
}

#[derive(Clone, Debug)]
pub(crate) struct Swarm {
    params: PsoParams,
    particles: Vec<Particle>,
    global_best: Option<(f64, f64)>,
    cursor: usize,
}

impl Swarm {
    pub(crate) fn new(params: PsoParams, rng: &mut Stream) -> Self {
        let particles = (0..params.particles)
            .map(|_| {
                let position = rng.uniform();
                let velocity = ((rng.uniform() - position) / 2.0)
                    .clamp(-params.velocity_clamp, params.velocity_clamp);
                Particle {
                    position,
                    velocity,
                    best_position: position,
                    best_value: f64::NEG_INFINITY,
                }
            })
            .collect();
        Self {
            params,
            particles,
            global_best: None,
            cursor: 0,
        }
    }

    pub(crate) fn propose(&self) -> f64 {
        self.particles[self.cursor].position
    }

    pub(crate) fn observe(&mut self, lambda: f64, value: f64, rng: &mut Stream) -> Flow {
        let p = &mut self.particles[self.cursor];
        if value > p.best_value {
            p.best_value = value;
            p.best_position = lambda;
        }
        if self.global_best.is_none_or(|(_, best)| value > best) {
            self.global_best = Some((lambda, value));
        }
        self.cursor += 1;
        if self.cursor == self.particles.len() {
            self.cursor = 0;
            self.step(rng);
        }
        Flow::Continue
    }

    fn step(&mut self, rng: &mut Stream) {
        let global = self.global_best.map_or(0.5, |(x, _)| x);
        for p in &mut self.particles {
            let r1 = rng.uniform();
            let r2 = rng.uniform();
            pso_update(p, global, &self.params, r1, r2);
        }
    }

    pub(crate) fn recommend(&self, trace: &[Evaluation]) -> f64 {
        argmax_lambda(trace)
    }

    #[cfg(test)]
    pub(crate) fn particles(&self) -> &[Particle] {
        &self.particles
    }
}
