//! λ-search strategies behind a single ask/tell state machine.
//!
//! A [`SearchState`] proposes trade-off values with [`SearchState::ask`] and
//! receives observed returns through [`SearchState::tell`]. The state owns
//! its random stream and an explicit evaluation budget, so the same
//! conversation can run inside a batch experiment or a live, interruptible
//! session and produce the same trace.
//!
//! ```
//! use tradeoff_core::search::{SearchState, StrategyConfig, StrategyKind};
//!
//! let mut state = SearchState::init(StrategyConfig::default_for(StrategyKind::IncCon), 30, 7).unwrap();
//! while !state.finished() {
//!     let lambda = state.ask().unwrap();
//!     let value = 1.0 - 4.0 * (lambda.value() - 0.5).powi(2);
//!     state.tell(lambda, value).unwrap();
//! }
//! assert_eq!(state.recommend().unwrap().value(), 0.5);
//! ```

mod de;
pub mod lowdisc;
mod pso;
mod scr;
mod walk;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use de::{de_select, de_step, DeParams, Member};
pub use lowdisc::{van_der_corput, Scramble};
pub use pso::{pso_update, Particle, PsoParams};
pub use scr::{scr_points, ScrParams};

use crate::landscape::{evaluate, Landscape, LandscapeError, TradeOff};
use crate::rng::{derive_seed, tags, Stream};
use de::Evolution;
use pso::Swarm;
use scr::OneShot;
use walk::{Walk, WalkRule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid {kind} hyperparameters: {reason}")]
    InvalidHyperparameters { kind: StrategyKind, reason: String },
    #[error("{kind} needs a budget of at least {minimum} evaluations, got {budget}")]
    BudgetBelowMinimum {
        kind: StrategyKind,
        budget: usize,
        minimum: usize,
    },
    #[error("search has finished; no further asks or tells are accepted")]
    Finished,
    #[error("search is still running; no recommendation yet")]
    NotFinished,
    #[error("told lambda {told} but the pending ask is {pending:?}")]
    UnrequestedLambda { told: f64, pending: Option<f64> },
    #[error("observed return must be finite, got {0}")]
    NonFiniteReturn(f64),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
}

/// The seven strategy families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    IncCon,
    IncBeh,
    Greedy,
    Pso,
    Scr,
    De,
    Meta,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::IncCon,
        StrategyKind::IncBeh,
        StrategyKind::Greedy,
        StrategyKind::Pso,
        StrategyKind::Scr,
        StrategyKind::De,
        StrategyKind::Meta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::IncCon => "inc-con",
            StrategyKind::IncBeh => "inc-beh",
            StrategyKind::Greedy => "greedy",
            StrategyKind::Pso => "pso",
            StrategyKind::Scr => "scr",
            StrategyKind::De => "de",
            StrategyKind::Meta => "meta",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

/// Step size for the fixed-step walks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkParams {
    pub step: f64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self { step: 0.05 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetaParams {
    /// Budgets below this delegate to Scr, others to DE.
    pub threshold: usize,
    pub scr: ScrParams,
    pub de: DeParams,
}

impl Default for MetaParams {
    fn default() -> Self {
        Self {
            threshold: 30,
            scr: ScrParams::default(),
            de: DeParams::default(),
        }
    }
}

/// A strategy together with its hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StrategyConfig {
    IncCon(WalkParams),
    IncBeh(WalkParams),
    Greedy(WalkParams),
    Pso(PsoParams),
    Scr(ScrParams),
    De(DeParams),
    Meta(MetaParams),
}

impl StrategyConfig {
    pub fn default_for(kind: StrategyKind) -> Self {
        match kind {
            StrategyKind::IncCon => StrategyConfig::IncCon(WalkParams::default()),
            StrategyKind::IncBeh => StrategyConfig::IncBeh(WalkParams::default()),
            StrategyKind::Greedy => StrategyConfig::Greedy(WalkParams::default()),
            StrategyKind::Pso => StrategyConfig::Pso(PsoParams::default()),
            StrategyKind::Scr => StrategyConfig::Scr(ScrParams::default()),
            StrategyKind::De => StrategyConfig::De(DeParams::default()),
            StrategyKind::Meta => StrategyConfig::Meta(MetaParams::default()),
        }
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategyConfig::IncCon(_) => StrategyKind::IncCon,
            StrategyConfig::IncBeh(_) => StrategyKind::IncBeh,
            StrategyConfig::Greedy(_) => StrategyKind::Greedy,
            StrategyConfig::Pso(_) => StrategyKind::Pso,
            StrategyConfig::Scr(_) => StrategyKind::Scr,
            StrategyConfig::De(_) => StrategyKind::De,
            StrategyConfig::Meta(_) => StrategyKind::Meta,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let result = match self {
            StrategyConfig::IncCon(w) | StrategyConfig::IncBeh(w) | StrategyConfig::Greedy(w) => {
                if w.step > 0.0 && w.step <= 1.0 {
                    Ok(())
                } else {
                    Err(format!("step must lie in (0, 1], got {}", w.step))
                }
            }
            StrategyConfig::Pso(p) => p.validate(),
            StrategyConfig::Scr(_) => Ok(()),
            StrategyConfig::De(d) => d.validate(),
            StrategyConfig::Meta(m) => {
                if m.threshold == 0 {
                    Err("threshold must be positive".to_string())
                } else {
                    m.de.validate()
                }
            }
        };
        result.map_err(|reason| SearchError::InvalidHyperparameters {
            kind: self.kind(),
            reason,
        })
    }

    /// Smallest budget the strategy accepts.
    pub fn minimum_budget(&self, budget: usize) -> usize {
        match self {
            StrategyConfig::De(d) => d.population,
            StrategyConfig::Meta(m) => match meta_select(budget, m.threshold) {
                StrategyKind::De => m.de.population,
                _ => 1,
            },
            _ => 1,
        }
    }
}

/// Strategy the meta optimizer delegates to for a given budget.
pub fn meta_select(budget: usize, threshold: usize) -> StrategyKind {
    if budget < threshold {
        StrategyKind::Scr
    } else {
        StrategyKind::De
    }
}

/// One told evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub lambda: f64,
    pub observed_return: f64,
}

/// λ of the best observed return, first occurrence on ties.
pub(crate) fn argmax_lambda(trace: &[Evaluation]) -> f64 {
    let mut best: Option<&Evaluation> = None;
    for e in trace {
        if best.is_none_or(|b| e.observed_return > b.observed_return) {
            best = Some(e);
        }
    }
    best.map_or(0.0, |e| e.lambda)
}

/// Ordered record of a search conversation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub strategy: StrategyConfig,
    pub budget: usize,
    pub seed: u64,
    pub evaluations: Vec<Evaluation>,
    pub recommendation: Option<f64>,
}

impl SearchTrace {
    pub fn len(&self) -> usize {
        self.evaluations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evaluations.is_empty()
    }

    pub fn returns(&self) -> impl Iterator<Item = f64> + '_ {
        self.evaluations.iter().map(|e| e.observed_return)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Running,
    Finished,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Flow {
    Continue,
    Stop,
}

#[derive(Clone, Debug)]
enum Engine {
    Walk(Walk),
    Swarm(Swarm),
    OneShot(OneShot),
    Evolution(Evolution),
}

impl Engine {
    fn build(config: &StrategyConfig, budget: usize, rng: &mut Stream) -> Self {
        match *config {
            StrategyConfig::IncCon(w) => Engine::Walk(Walk::new(WalkRule::Conservative, w.step)),
            StrategyConfig::IncBeh(w) => Engine::Walk(Walk::new(WalkRule::Behavioral, w.step)),
            StrategyConfig::Greedy(w) => Engine::Walk(Walk::new(WalkRule::Greedy, w.step)),
            StrategyConfig::Pso(p) => Engine::Swarm(Swarm::new(p, rng)),
            StrategyConfig::Scr(s) => Engine::OneShot(OneShot::new(s, budget, rng)),
            StrategyConfig::De(d) => Engine::Evolution(Evolution::new(d, rng)),
            StrategyConfig::Meta(m) => match meta_select(budget, m.threshold) {
                StrategyKind::Scr => Engine::build(&StrategyConfig::Scr(m.scr), budget, rng),
                _ => Engine::build(&StrategyConfig::De(m.de), budget, rng),
            },
        }
    }

    fn propose(&self) -> f64 {
        match self {
            Engine::Walk(w) => w.propose(),
            Engine::Swarm(s) => s.propose(),
            Engine::OneShot(o) => o.propose(),
            Engine::Evolution(e) => e.propose(),
        }
    }

    fn observe(&mut self, lambda: f64, value: f64, rng: &mut Stream) -> Flow {
        match self {
            Engine::Walk(w) => w.observe(lambda, value),
            Engine::Swarm(s) => s.observe(lambda, value, rng),
            Engine::OneShot(o) => o.observe(),
            Engine::Evolution(e) => e.observe(lambda, value, rng),
        }
    }

    fn recommend(&self, trace: &[Evaluation]) -> f64 {
        match self {
            Engine::Walk(w) => w.recommend(trace),
            Engine::Swarm(s) => s.recommend(trace),
            Engine::OneShot(o) => o.recommend(trace),
            Engine::Evolution(e) => e.recommend(trace),
        }
    }
}

/// Per-strategy state machine driven by ask/tell under a fixed budget.
#[derive(Clone, Debug)]
pub struct SearchState {
    trace: SearchTrace,
    phase: Phase,
    pending: Option<TradeOff>,
    rng: Stream,
    engine: Engine,
}

impl SearchState {
    /// Starts a search. `seed` drives every random choice the strategy makes.
    pub fn init(config: StrategyConfig, budget: usize, seed: u64) -> Result<Self, SearchError> {
        config.validate()?;
        let minimum = config.minimum_budget(budget).max(1);
        if budget < minimum {
            return Err(SearchError::BudgetBelowMinimum {
                kind: config.kind(),
                budget,
                minimum,
            });
        }
        let mut rng = Stream::new(seed);
        let engine = Engine::build(&config, budget, &mut rng);
        Ok(Self {
            trace: SearchTrace {
                strategy: config,
                budget,
                seed,
                evaluations: Vec::with_capacity(budget),
                recommendation: None,
            },
            phase: Phase::Running,
            pending: None,
            rng,
            engine,
        })
    }

    /// Next λ to evaluate. Repeated asks without a tell return the same value.
    pub fn ask(&mut self) -> Result<TradeOff, SearchError> {
        if self.phase == Phase::Finished {
            return Err(SearchError::Finished);
        }
        if let Some(p) = self.pending {
            return Ok(p);
        }
        let lambda = TradeOff::clamped(self.engine.propose());
        self.pending = Some(lambda);
        Ok(lambda)
    }

    /// Reports the return observed at the pending λ.
    pub fn tell(&mut self, lambda: TradeOff, observed_return: f64) -> Result<(), SearchError> {
        if self.phase == Phase::Finished {
            return Err(SearchError::Finished);
        }
        match self.pending {
            Some(p) if p.value().to_bits() == lambda.value().to_bits() => {}
            pending => {
                return Err(SearchError::UnrequestedLambda {
                    told: lambda.value(),
                    pending: pending.map(TradeOff::value),
                })
            }
        }
        if !observed_return.is_finite() {
            return Err(SearchError::NonFiniteReturn(observed_return));
        }
        self.pending = None;
        self.trace.evaluations.push(Evaluation {
            lambda: lambda.value(),
            observed_return,
        });
        let flow = self.engine.observe(lambda.value(), observed_return, &mut self.rng);
        if flow == Flow::Stop || self.trace.evaluations.len() >= self.trace.budget {
            self.phase = Phase::Finished;
            let rec = self.engine.recommend(&self.trace.evaluations);
            self.trace.recommendation = Some(rec);
        }
        Ok(())
    }

    pub fn finished(&self) -> bool {
        self.phase == Phase::Finished
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn recommend(&self) -> Result<TradeOff, SearchError> {
        match (self.phase, self.trace.recommendation) {
            (Phase::Finished, Some(r)) => Ok(TradeOff::clamped(r)),
            _ => Err(SearchError::NotFinished),
        }
    }

    pub fn pending(&self) -> Option<TradeOff> {
        self.pending
    }

    pub fn kind(&self) -> StrategyKind {
        self.trace.strategy.kind()
    }

    pub fn budget_total(&self) -> usize {
        self.trace.budget
    }

    pub fn budget_used(&self) -> usize {
        self.trace.evaluations.len()
    }

    pub fn trace(&self) -> &SearchTrace {
        &self.trace
    }

    pub fn into_trace(self) -> SearchTrace {
        self.trace
    }

    /// The precomputed point set of a one-shot strategy.
    pub fn planned_points(&self) -> Option<&[f64]> {
        match &self.engine {
            Engine::OneShot(o) => Some(o.points()),
            _ => None,
        }
    }
}

/// Seeds for the independent streams of one search run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSeeds {
    pub search: u64,
    pub evaluation: u64,
    pub final_return: u64,
    pub manual: u64,
}

impl RunSeeds {
    pub fn new(run_seed: u64) -> Self {
        Self {
            search: derive_seed(run_seed, &[tags::SEARCH]),
            evaluation: derive_seed(run_seed, &[tags::EVALUATION]),
            final_return: derive_seed(run_seed, &[tags::FINAL_RETURN]),
            manual: derive_seed(run_seed, &[tags::MANUAL]),
        }
    }
}

/// Evaluates the state's pending ask on `landscape` and tells the result.
pub fn step(
    state: &mut SearchState,
    landscape: &dyn Landscape,
    episodes: usize,
    rng: &mut Stream,
) -> Result<Evaluation, SearchError> {
    let lambda = state.ask()?;
    let sample = evaluate(landscape, lambda, episodes, rng)?;
    state.tell(lambda, sample.observed_return)?;
    Ok(Evaluation {
        lambda: lambda.value(),
        observed_return: sample.observed_return,
    })
}

/// Runs a strategy to completion against a landscape.
///
/// All randomness derives from `run_seed` through [`RunSeeds`], so live
/// sessions started with the same seed reproduce this trace exactly.
pub fn run_search(
    config: StrategyConfig,
    budget: usize,
    landscape: &dyn Landscape,
    run_seed: u64,
    episodes: usize,
) -> Result<SearchTrace, SearchError> {
    let seeds = RunSeeds::new(run_seed);
    let mut state = SearchState::init(config, budget, seeds.search)?;
    let mut eval_rng = Stream::new(seeds.evaluation);
    while !state.finished() {
        step(&mut state, landscape, episodes, &mut eval_rng)?;
    }
    Ok(state.into_trace())
}
