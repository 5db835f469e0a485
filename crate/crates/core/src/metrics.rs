//! Search-quality metrics, per-landscape normalization and aggregation.
//!
//! | metric | definition |
//! |---|---|
//! | R   | mean return of the recommended λ over fresh episodes |
//! | RUB | R of the same strategy when its budget is capped |
//! | MBR | mean over the trace of `max(0, r_behavioral − r)` |
//! | MOR | mean over the trace of `r_star − r` (unclipped) |

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::landscape::{evaluate, Landscape, LandscapeError, TradeOff};
use crate::rng::Stream;
use crate::search::{run_search, RunSeeds, SearchError, SearchTrace, StrategyConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("the search has not finished, so there is no recommendation")]
    Unfinished,
    #[error("the trace has no evaluations")]
    EmptyTrace,
    #[error("normalization needs at least 2 values, got {0}")]
    TooFewValues(usize),
    #[error("normalization is degenerate: all values equal {0}")]
    Degenerate(f64),
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("aggregation group `{0}` is empty")]
    EmptyGroup(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
}

/// Mean return of the trace's recommendation over `episodes` fresh episodes.
pub fn final_return(
    trace: &SearchTrace,
    landscape: &dyn Landscape,
    episodes: usize,
    rng: &mut Stream,
) -> Result<f64, MetricsError> {
    let lambda = trace.recommendation.ok_or(MetricsError::Unfinished)?;
    let lambda = TradeOff::new(lambda)?;
    Ok(evaluate(landscape, lambda, episodes, rng)?.observed_return)
}

/// Runs `config` with its budget capped at `budget_limit` and measures the
/// final return of its recommendation on the run's final-return stream.
///
/// Returns the value and the capped trace.
pub fn return_under_budget(
    config: StrategyConfig,
    landscape: &dyn Landscape,
    budget_limit: usize,
    run_seed: u64,
    search_episodes: usize,
    final_episodes: usize,
) -> Result<(f64, SearchTrace), MetricsError> {
    let trace = run_search(config, budget_limit, landscape, run_seed, search_episodes)?;
    let mut rng = Stream::new(RunSeeds::new(run_seed).final_return);
    let value = final_return(&trace, landscape, final_episodes, &mut rng)?;
    Ok((value, trace))
}

/// Mean over the trace of `max(0, r_behavioral − r)`.
pub fn mean_behavioral_regret(trace: &SearchTrace, r_behavioral: f64) -> Result<f64, MetricsError> {
    mean_of(trace, |r| (r_behavioral - r).max(0.0))
}

/// Mean over the trace of `r_star − r`.
pub fn mean_optimal_regret(trace: &SearchTrace, r_star: f64) -> Result<f64, MetricsError> {
    mean_of(trace, |r| r_star - r)
}

fn mean_of(trace: &SearchTrace, f: impl Fn(f64) -> f64) -> Result<f64, MetricsError> {
    if trace.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    Ok(trace.returns().map(f).sum::<f64>() / trace.len() as f64)
}

/// Per-run metrics with the references they were computed against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub final_return: f64,
    pub return_under_budget: f64,
    pub mean_behavioral_regret: f64,
    pub mean_optimal_regret: f64,
    pub r_behavioral: f64,
    pub r_star: f64,
    pub budget_limit: usize,
}

/// Everything a single strategy × landscape × seed run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub report: MetricReport,
    pub trace: SearchTrace,
    pub limited_trace: SearchTrace,
}

/// Reference returns used by the regret metrics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct References {
    pub r_behavioral: f64,
    pub r_star: f64,
}

/// Budgets and episode counts for [`measure_run`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunBudget {
    pub budget: usize,
    pub budget_limit: usize,
    pub search_episodes: usize,
    pub final_episodes: usize,
}

/// Runs a strategy at the full and capped budgets and computes its report.
pub fn measure_run(
    config: StrategyConfig,
    landscape: &dyn Landscape,
    references: References,
    budget: RunBudget,
    run_seed: u64,
) -> Result<RunOutcome, MetricsError> {
    let trace = run_search(config.clone(), budget.budget, landscape, run_seed, budget.search_episodes)?;
    let mut rng = Stream::new(RunSeeds::new(run_seed).final_return);
    let final_value = final_return(&trace, landscape, budget.final_episodes, &mut rng)?;
    let (rub, limited_trace) = return_under_budget(
        config,
        landscape,
        budget.budget_limit,
        run_seed,
        budget.search_episodes,
        budget.final_episodes,
    )?;
    let report = MetricReport {
        final_return: final_value,
        return_under_budget: rub,
        mean_behavioral_regret: mean_behavioral_regret(&trace, references.r_behavioral)?,
        mean_optimal_regret: mean_optimal_regret(&trace, references.r_star)?,
        r_behavioral: references.r_behavioral,
        r_star: references.r_star,
        budget_limit: budget.budget_limit,
    };
    Ok(RunOutcome {
        report,
        trace,
        limited_trace,
    })
}

/// Affine map of `values` onto `[0, 1]` by their minimum and maximum.
pub fn normalize(values: &[f64]) -> Result<Vec<f64>, MetricsError> {
    if values.len() < 2 {
        return Err(MetricsError::TooFewValues(values.len()));
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite(bad));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(MetricsError::Degenerate(lo));
    }
    Ok(values
        .iter()
        .map(|&v| {
            if v == lo {
                0.0
            } else if v == hi {
                1.0
            } else {
                (v - lo) / (hi - lo)
            }
        })
        .collect())
}

/// Mean and standard error of one group of values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; 0 when `n == 1`.
    pub stderr: f64,
    pub n: usize,
    /// True when a single value makes the standard error meaningless.
    pub degenerate: bool,
}

/// Mean and standard error of `values`. Values are summed in sorted order,
/// so the result does not depend on input order.
pub fn aggregate(values: &[f64]) -> Result<Aggregate, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyGroup(String::new()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let stderr = if n < 2 {
        0.0
    } else {
        let mut deviations: Vec<f64> = sorted.iter().map(|v| (v - mean).powi(2)).collect();
        deviations.sort_by(f64::total_cmp);
        (deviations.iter().sum::<f64>() / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    };
    Ok(Aggregate {
        mean,
        stderr,
        n,
        degenerate: n < 2,
    })
}

/// [`aggregate`] per named group; groups keep their input order.
pub fn aggregate_groups<'a>(
    groups: impl IntoIterator<Item = (&'a str, &'a [f64])>,
) -> Result<Vec<(String, Aggregate)>, MetricsError> {
    groups
        .into_iter()
        .map(|(name, values)| match aggregate(values) {
            Ok(a) => Ok((name.to_string(), a)),
            Err(MetricsError::EmptyGroup(_)) => Err(MetricsError::EmptyGroup(name.to_string())),
            Err(e) => Err(e),
        })
        .collect()
}
