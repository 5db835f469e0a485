//! Fixed-step walks along the λ axis: Inc-Con, Inc-Beh and Greedy.

use super::{argmax_lambda, Evaluation, Flow};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum WalkRule {
    /// Walk up from 0; stop on the first strict decrease and keep the
    /// previous λ.
    Conservative,
    /// Walk up from 0; stop once a return falls strictly below the λ = 0
    /// return, then keep the best λ seen.
    Behavioral,
    /// Walk down from 1; stop on the first strict decrease and keep the best
    /// λ seen.
    Greedy,
}

#[derive(Clone, Debug)]
pub(crate) struct Walk {
    rule: WalkRule,
    step: f64,
    index: usize,
    previous: Option<f64>,
    reference: Option<f64>,
    stopped_on_decrease: bool,
}

impl Walk {
    pub(crate) fn new(rule: WalkRule, step: f64) -> Self {
        Self {
            rule,
            step,
            index: 0,
            previous: None,
            reference: None,
            stopped_on_decrease: false,
        }
    }

    fn lambda_at(&self, index: usize) -> f64 {
        let offset = index as f64 * self.step;
        match self.rule {
            WalkRule::Conservative | WalkRule::Behavioral => offset.min(1.0),
            WalkRule::Greedy => (1.0 - offset).max(0.0),
        }
    }

    pub(crate) fn propose(&self) -> f64 {
        self.lambda_at(self.index)
    }

    pub(crate) fn observe(&mut self, lambda: f64, value: f64) -> Flow {
        let decreased = self.previous.is_some_and(|p| value < p);
        let flow = match self.rule {
            WalkRule::Conservative | WalkRule::Greedy if decreased => {
                self.stopped_on_decrease = true;
                Flow::Stop
            }
            WalkRule::Behavioral if self.reference.is_some_and(|r| value < r) => Flow::Stop,
            _ => {
                let boundary = match self.rule {
                    WalkRule::Greedy => 0.0,
                    _ => 1.0,
                };
                if lambda == boundary {
                    Flow::Stop
                } else {
                    Flow::Continue
                }
            }
        };
        if self.reference.is_none() {
            self.reference = Some(value);
        }
        self.previous = Some(value);
        self.index += 1;
        flow
    }

    pub(crate) fn recommend(&self, trace: &[Evaluation]) -> f64 {
        match self.rule {
            WalkRule::Conservative => {
                if self.stopped_on_decrease && trace.len() >= 2 {
                    trace[trace.len() - 2].lambda
                } else {
                    trace.last().map_or(0.0, |e| e.lambda)
                }
            }
            WalkRule::Behavioral | WalkRule::Greedy => argmax_lambda(trace),
        }
    }
}
