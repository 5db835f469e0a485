//! One-shot search over a scrambled radical-inverse point set plus the
//! middle point.

use serde::{Deserialize, Serialize};

use super::lowdisc::{van_der_corput, Scramble};
use super::{argmax_lambda, Evaluation, Flow};
use crate::rng::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScrParams {
    /// Apply a seeded digit flip to the radical-inverse points.
    pub scramble: bool,
}

impl Default for ScrParams {
    fn default() -> Self {
        Self { scramble: true }
    }
}

/// The full evaluation plan for `budget` evaluations: 0.5 first, then
/// radical-inverse points for indices `1..budget`.
pub fn scr_points(budget: usize, scramble: Scramble) -> Vec<f64> {
    std::iter::once(0.5)
        .chain((1..budget as u32).map(|i| van_der_corput(i, scramble)))
        .collect()
}

#[derive(Clone, Debug)]
pub(crate) struct OneShot {
    points: Vec<f64>,
    cursor: usize,
}

impl OneShot {
    pub(crate) fn new(params: ScrParams, budget: usize, rng: &mut Stream) -> Self {
        let scramble = if params.scramble {
            Scramble::seeded(rng)
        } else {
            Scramble::None
        };
        Self {
            points: scr_points(budget, scramble),
            cursor: 0,
        }
    }

    pub(crate) fn points(&self) -> &[f64] {
        &self.points
    }

    pub(crate) fn propose(&self) -> f64 {
        self.points[self.cursor]
    }

    pub(crate) fn observe(&mut self) -> Flow {
        self.cursor += 1;
        if self.cursor == self.points.len() {
            Flow::Stop
        } else {
            Flow::Continue
        }
    }

    pub(crate) fn recommend(&self, trace: &[Evaluation]) -> f64 {
        argmax_lambda(trace)
    }
}
