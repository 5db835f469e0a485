use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use tradeoff_core::harness::{BuiltLandscape, SweepCurve};
use tradeoff_core::landscape::{evaluate, Landscape, TradeOff};
use tradeoff_core::rng::Stream;
use tradeoff_core::search::{RunSeeds, SearchError, SearchState, StrategyConfig, StrategyKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("unknown session {0}")]
    UnknownSession(u64),
    #[error("unknown landscape `{0}`")]
    UnknownLandscape(String),
    #[error("session {0} is stopped; switch to manual mode to keep evaluating")]
    Stopped(u64),
    #[error("the search of session {0} has finished and cannot resume")]
    SearchFinished(u64),
    #[error("manual mode needs a lambda")]
    MissingLambda,
    #[error("lambda is only accepted together with manual mode")]
    UnexpectedLambda,
    #[error("lambda must lie in [0, 1], got {0}")]
    LambdaOutOfRange(f64),
    #[error(transparent)]
    Search(#[from] SearchError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Autopilot,
    Manual,
    Stopped,
}

/// One evaluation in a session's history.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: usize,
    /// Milliseconds since the session was created.
    pub elapsed_ms: u64,
    pub lambda: f64,
    pub observed_return: f64,
    pub mode: Mode,
}

/// Landscapes sessions can bind to.
#[derive(Debug, Default)]
pub struct Registry {
    landscapes: BTreeMap<String, BuiltLandscape>,
    episodes_per_eval: usize,
}

/// Listing entry for a registered landscape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeInfo {
    pub id: String,
    pub kind: String,
    pub has_proximity: bool,
    pub best_lambda: f64,
    pub best_return: f64,
    pub behavioral_return: f64,
}

impl Registry {
    pub fn new(landscapes: Vec<BuiltLandscape>, episodes_per_eval: usize) -> Self {
        Self {
            landscapes: landscapes.into_iter().map(|b| (b.id().to_string(), b)).collect(),
            episodes_per_eval: episodes_per_eval.max(1),
        }
    }

    pub fn episodes_per_eval(&self) -> usize {
        self.episodes_per_eval
    }

    pub fn get(&self, id: &str) -> Option<&BuiltLandscape> {
        self.landscapes.get(id)
    }

    pub fn list(&self) -> Vec<LandscapeInfo> {
        self.landscapes
            .values()
            .map(|b| LandscapeInfo {
                id: b.id().to_string(),
                kind: match b.entry {
                    tradeoff_core::harness::LandscapeEntry::Synthetic { .. } => "synthetic".into(),
                    tradeoff_core::harness::LandscapeEntry::Lion { .. } => "lion".into(),
                },
                has_proximity: b.sweep.proximity.is_some(),
                best_lambda: b.oracle.best_lambda.value(),
                best_return: b.oracle.best_return,
                behavioral_return: b.references.r_behavioral,
            })
            .collect()
    }

    pub fn sweep(&self, id: &str) -> Option<&SweepCurve> {
        self.landscapes.get(id).map(|b| &b.sweep)
    }
}

/// A live search against one landscape.
pub struct Session {
    id: u64,
    landscape_id: String,
    landscape: Arc<dyn Landscape>,
    episodes: usize,
    seed: u64,
    state: SearchState,
    mode: Mode,
    manual_lambda: Option<TradeOff>,
    history: Vec<HistoryEntry>,
    evaluation_rng: Stream,
    manual_rng: Stream,
    created: Instant,
}

/// Consistent read-only view of a session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: u64,
    pub landscape: String,
    pub strategy: StrategyKind,
    pub seed: u64,
    pub mode: Mode,
    pub manual_lambda: Option<f64>,
    pub budget_total: usize,
    pub budget_used: usize,
    pub budget_remaining: usize,
    pub finished: bool,
    pub recommendation: Option<f64>,
    /// Total history length; `history` holds entries from `since` on.
    pub history_len: usize,
    pub since: usize,
    pub history: Vec<HistoryEntry>,
    /// Where the landscape's sweep curve can be fetched.
    pub sweep: String,
}

impl Session {
    /// A fresh autopilot session. Its strategy-driven evaluations reproduce
    /// the batch trace for `seed` exactly.
    pub fn new(
        id: u64,
        landscape: &BuiltLandscape,
        episodes: usize,
        strategy: StrategyConfig,
        budget: usize,
        seed: u64,
    ) -> Result<Self, SessionError> {
        let seeds = RunSeeds::new(seed);
        let state = SearchState::init(strategy, budget, seeds.search)?;
        Ok(Self {
            id,
            landscape_id: landscape.id().to_string(),
            landscape: Arc::clone(&landscape.landscape),
            episodes,
            seed,
            state,
            mode: Mode::Autopilot,
            manual_lambda: None,
            history: Vec::new(),
            evaluation_rng: Stream::new(seeds.evaluation),
            manual_rng: Stream::new(seeds.manual),
            created: Instant::now(),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn state(&self) -> &SearchState {
        &self.state
    }

    /// Autopilot: ask, evaluate, tell. Manual: evaluate the manual λ without
    /// involving the strategy.
    pub fn tick(&mut self) -> Result<HistoryEntry, SessionError> {
        let (lambda, observed_return) = match self.mode {
            Mode::Stopped => return Err(SessionError::Stopped(self.id)),
            Mode::Manual => {
                let lambda = self.manual_lambda.ok_or(SessionError::MissingLambda)?;
                let sample = evaluate(self.landscape.as_ref(), lambda, self.episodes, &mut self.manual_rng)
                    .map_err(SearchError::from)?;
                (lambda, sample.observed_return)
            }
            Mode::Autopilot => {
                if self.state.finished() {
                    self.mode = Mode::Stopped;
                    return Err(SessionError::Stopped(self.id));
                }
                let lambda = self.state.ask()?;
                let sample = evaluate(self.landscape.as_ref(), lambda, self.episodes, &mut self.evaluation_rng)
                    .map_err(SearchError::from)?;
                self.state.tell(lambda, sample.observed_return)?;
                (lambda, sample.observed_return)
            }
        };
        let entry = HistoryEntry {
            step: self.history.len(),
            elapsed_ms: self.created.elapsed().as_millis() as u64,
            lambda: lambda.value(),
            observed_return,
            mode: self.mode,
        };
        self.history.push(entry);
        if self.mode == Mode::Autopilot && self.state.finished() {
            self.mode = Mode::Stopped;
        }
        Ok(entry)
    }

    /// Switches mode. `lambda` is required for, and only accepted with,
    /// manual mode.
    pub fn set_mode(&mut self, mode: Mode, lambda: Option<f64>) -> Result<(), SessionError> {
        match (mode, lambda) {
            (Mode::Manual, None) => return Err(SessionError::MissingLambda),
            (Mode::Manual, Some(l)) => {
                let l = TradeOff::new(l).map_err(|_| SessionError::LambdaOutOfRange(l))?;
                self.manual_lambda = Some(l);
            }
            (_, Some(_)) => return Err(SessionError::UnexpectedLambda),
            (Mode::Autopilot, None) => {
                if self.state.finished() {
                    return Err(SessionError::SearchFinished(self.id));
                }
            }
            (Mode::Stopped, None) => {}
        }
        self.mode = mode;
        Ok(())
    }

    pub fn snapshot(&self, since: usize) -> Snapshot {
        let since = since.min(self.history.len());
        Snapshot {
            id: self.id,
            landscape: self.landscape_id.clone(),
            strategy: self.state.kind(),
            seed: self.seed,
            mode: self.mode,
            manual_lambda: self.manual_lambda.map(TradeOff::value),
            budget_total: self.state.budget_total(),
            budget_used: self.state.budget_used(),
            budget_remaining: self.state.budget_total() - self.state.budget_used(),
            finished: self.state.finished(),
            recommendation: self.state.recommend().ok().map(TradeOff::value),
            history_len: self.history.len(),
            since,
            history: self.history[since..].to_vec(),
            sweep: format!("/landscapes/{}/sweep", self.landscape_id),
        }
    }
}

/// Thread-safe store of independent sessions.
///
/// Each session sits behind its own mutex, so ticks and mode changes on one
/// session are serialized while other sessions proceed in parallel.
pub struct SessionManager {
    registry: Arc<Registry>,
    sessions: RwLock<HashMap<u64, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl SessionManager {
    pub fn new(registry: Arc<Registry>) -> Self {
        Self {
            registry,
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn create(&self, landscape: &str, strategy: StrategyConfig, budget: usize, seed: u64) -> Result<u64, SessionError> {
        let built = self
            .registry
            .get(landscape)
            .ok_or_else(|| SessionError::UnknownLandscape(landscape.to_string()))?;
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let session = Session::new(id, built, self.registry.episodes_per_eval(), strategy, budget, seed)?;
        self.sessions
            .write()
            .expect("session table lock")
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// Runs `f` with exclusive access to session `id`.
    pub fn with<T>(&self, id: u64, f: impl FnOnce(&mut Session) -> T) -> Result<T, SessionError> {
        let session = self
            .sessions
            .read()
            .expect("session table lock")
            .get(&id)
            .cloned()
            .ok_or(SessionError::UnknownSession(id))?;
        let mut guard = session.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
        Ok(f(&mut guard))
    }

    pub fn tick(&self, id: u64) -> Result<HistoryEntry, SessionError> {
        self.with(id, Session::tick)?
    }

    pub fn set_mode(&self, id: u64, mode: Mode, lambda: Option<f64>) -> Result<Snapshot, SessionError> {
        self.with(id, |s| {
            s.set_mode(mode, lambda)?;
            Ok(s.snapshot(s.history().len()))
        })?
    }

    pub fn snapshot(&self, id: u64, since: usize) -> Result<Snapshot, SessionError> {
        self.with(id, |s| s.snapshot(since))
    }
}
