use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::suite::{build_landscape, key_hash, BuiltLandscape, SweepCurve};
use super::HarnessError;
use crate::metrics::{aggregate, measure_run, normalize, Aggregate, MetricsError, RunBudget};
use crate::rng::{derive_seed, tags};
use crate::search::{SearchTrace, StrategyConfig, StrategyKind};

/// One (landscape, strategy, seed) result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub landscape: String,
    pub strategy: StrategyKind,
    pub seed: u64,
    /// Seed all of the row's streams derive from; a live session started
    /// with it reproduces the row's trace.
    pub run_seed: u64,
    pub final_return: f64,
    pub return_under_budget: f64,
    pub mean_behavioral_regret: f64,
    pub mean_optimal_regret: f64,
    pub r_behavioral: f64,
    pub r_star: f64,
    pub budget: usize,
    pub budget_limit: usize,
    pub evaluations: usize,
    pub recommendation: f64,
    /// Key of the row's record in the trace log.
    pub trace: String,
}

impl Row {
    fn sort_key(&self) -> (&str, usize, u64) {
        (&self.landscape, strategy_rank(self.strategy), self.seed)
    }
}

fn strategy_rank(kind: StrategyKind) -> usize {
    StrategyKind::ALL.iter().position(|&k| k == kind).expect("every kind is listed")
}

/// Full and budget-capped traces of one row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: String,
    pub full: SearchTrace,
    pub limited: SearchTrace,
}

/// A landscape whose rows were dropped, with the reason.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandscapeFailure {
    pub landscape: String,
    pub error: String,
}

/// Normalized per-strategy aggregate of one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyAggregate {
    pub strategy: StrategyKind,
    #[serde(flatten)]
    pub value: Aggregate,
}

/// A landscape left out of one metric's aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub landscape: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub strategies: Vec<StrategyAggregate>,
    pub excluded: Vec<Exclusion>,
}

impl MetricSummary {
    pub fn get(&self, kind: StrategyKind) -> Option<&Aggregate> {
        self.strategies.iter().find(|s| s.strategy == kind).map(|s| &s.value)
    }
}

/// Aggregate block of a results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub rows: usize,
    pub landscapes: Vec<String>,
    pub failures: Vec<LandscapeFailure>,
    pub metrics: Vec<MetricSummary>,
}

impl Summary {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == name)
    }
}

/// Names of the aggregated metrics, in report order.
pub const METRICS: [&str; 5] = ["r", "rub", "r_minus_rub", "mbr", "mor"];

#[derive(Clone, Debug)]
pub struct ResultsTable {
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    pub traces: Vec<TraceRecord>,
    pub sweeps: Vec<(String, SweepCurve)>,
    pub summary: Summary,
}

/// Hash of the result-relevant part of a config.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut canonical = config.clone();
    canonical.workers = None;
    canonical.cache_dir = None;
    let json = serde_json::to_string(&canonical).expect("experiment config serializes");
    format!("{:016x}", key_hash(&json))
}

/// Seed of the row for `seed` on `landscape` with `strategy`.
pub fn run_seed(master: u64, landscape: &str, strategy: StrategyKind, seed: u64) -> u64 {
    derive_seed(master, &[tags::ROW, key_hash(landscape), key_hash(strategy.as_str()), seed])
}

fn sorted_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Normalized aggregates recomputed from rows alone.
///
/// Per landscape, each strategy's metric is averaged over seeds and
/// min-max normalized across strategies. R and RUB share one normalization
/// so that their difference stays meaningful; MBR and MOR are normalized on
/// their own. Landscapes where a metric is constant across strategies are
/// excluded from that metric.
pub fn summarize(rows: &[Row]) -> Vec<MetricSummary> {
    let mut cells: BTreeMap<&str, BTreeMap<usize, [Vec<f64>; 4]>> = BTreeMap::new();
    for row in rows {
        let cell = cells
            .entry(row.landscape.as_str())
            .or_default()
            .entry(strategy_rank(row.strategy))
            .or_default();
        cell[0].push(row.final_return);
        cell[1].push(row.return_under_budget);
        cell[2].push(row.mean_behavioral_regret);
        cell[3].push(row.mean_optimal_regret);
    }
    let kinds: Vec<usize> = {
        let mut k: Vec<usize> = rows.iter().map(|r| strategy_rank(r.strategy)).collect();
        k.sort_unstable();
        k.dedup();
        k
    };
    let mut per_metric: Vec<(BTreeMap<usize, Vec<f64>>, Vec<Exclusion>)> =
        METRICS.iter().map(|_| (BTreeMap::new(), Vec::new())).collect();

    for (landscape, by_strategy) in &mut cells {
        let exclude = |per_metric: &mut Vec<(BTreeMap<usize, Vec<f64>>, Vec<Exclusion>)>, m: usize, reason: String| {
            per_metric[m].1.push(Exclusion {
                landscape: landscape.to_string(),
                reason,
            });
        };
        if by_strategy.len() != kinds.len() {
            for m in 0..METRICS.len() {
                exclude(&mut per_metric, m, "not every strategy has rows".into());
            }
            continue;
        }
        let means: Vec<[f64; 4]> = by_strategy
            .values_mut()
            .map(|c| [sorted_mean(&mut c[0]), sorted_mean(&mut c[1]), sorted_mean(&mut c[2]), sorted_mean(&mut c[3])])
            .collect();
        let n = means.len();
        let returns: Vec<f64> = means.iter().map(|m| m[0]).chain(means.iter().map(|m| m[1])).collect();
        let mut record = |m: usize, values: Result<Vec<f64>, MetricsError>| match values {
            Ok(values) => {
                for (&kind, v) in kinds.iter().zip(values) {
                    per_metric[m].0.entry(kind).or_default().push(v);
                }
            }
            Err(e) => exclude(&mut per_metric, m, e.to_string()),
        };
        match normalize(&returns) {
            Ok(v) => {
                let (r, rub) = v.split_at(n);
                record(0, Ok(r.to_vec()));
                record(1, Ok(rub.to_vec()));
                record(2, Ok(r.iter().zip(rub).map(|(a, b)| a - b).collect()));
            }
            Err(e) => {
                for m in 0..3 {
                    record(m, Err(e.clone()));
                }
            }
        }
        record(3, normalize(&means.iter().map(|m| m[2]).collect::<Vec<_>>()));
        record(4, normalize(&means.iter().map(|m| m[3]).collect::<Vec<_>>()));
    }

    METRICS
        .iter()
        .zip(per_metric)
        .map(|(name, (values, excluded))| MetricSummary {
            metric: name.to_string(),
            strategies: values
                .into_iter()
                .map(|(rank, v)| StrategyAggregate {
                    strategy: StrategyKind::ALL[rank],
                    value: aggregate(&v).expect("groups are nonempty"),
                })
                .collect(),
            excluded,
        })
        .collect()
}

fn strategy_rows(
    built: &BuiltLandscape,
    strategy: &StrategyConfig,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<(Row, TraceRecord), HarnessError> {
    let kind = strategy.kind();
    let run_seed = run_seed(config.seed, built.id(), kind, seed);
    let budget = RunBudget {
        budget: config.budget_unconstrained,
        budget_limit: config.budget_limited,
        search_episodes: config.episodes_per_eval,
        final_episodes: config.final_episodes,
    };
    let outcome = measure_run(*strategy, built.landscape.as_ref(), built.references, budget, run_seed)?;
    let id = format!("{}/{}/{}", built.id(), kind, seed);
    let report = outcome.report;
    let row = Row {
        landscape: built.id().to_string(),
        strategy: kind,
        seed,
        run_seed,
        final_return: report.final_return,
        return_under_budget: report.return_under_budget,
        mean_behavioral_regret: report.mean_behavioral_regret,
        mean_optimal_regret: report.mean_optimal_regret,
        r_behavioral: report.r_behavioral,
        r_star: report.r_star,
        budget: config.budget_unconstrained,
        budget_limit: config.budget_limited,
        evaluations: outcome.trace.len(),
        recommendation: outcome.trace.recommendation.expect("finished traces recommend"),
        trace: id.clone(),
    };
    Ok((
        row,
        TraceRecord {
            id,
            full: outcome.trace,
            limited: outcome.limited_trace,
        },
    ))
}

/// Builds the suite and runs every strategy × landscape × seed.
///
/// Results do not depend on the number of workers. A landscape that fails
/// to build or run loses its rows and is reported in the summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultsTable, HarnessError> {
    config.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| HarnessError::Runtime(e.to_string()))?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &ExperimentConfig) -> Result<ResultsTable, HarnessError> {
    let built: Vec<Result<BuiltLandscape, HarnessError>> =
        config.landscapes.par_iter().map(|entry| build_landscape(entry, config)).collect();
    let mut failures = Vec::new();
    let mut landscapes = Vec::new();
    for (entry, result) in config.landscapes.iter().zip(built) {
        match result {
            Ok(b) => landscapes.push(b),
            Err(e) => failures.push(LandscapeFailure {
                landscape: entry.id().to_string(),
                error: e.to_string(),
            }),
        }
    }

    let jobs: Vec<(usize, &StrategyConfig, u64)> = (0..landscapes.len())
        .flat_map(|l| config.strategies.iter().flat_map(move |s| config.seeds.iter().map(move |&seed| (l, s, seed))))
        .collect();
    let results: Vec<(usize, Result<(Row, TraceRecord), HarnessError>)> = jobs
        .par_iter()
        .map(|&(l, s, seed)| (l, strategy_rows(&landscapes[l], s, seed, config)))
        .collect();

    let mut failed = vec![None; landscapes.len()];
    let mut pairs = Vec::with_capacity(results.len());
    for (l, result) in results {
        match result {
            Ok(pair) => pairs.push((l, pair)),
            Err(e) => {
                failed[l].get_or_insert_with(|| e.to_string());
            }
        }
    }
    for (l, error) in failed.iter().enumerate() {
        if let Some(error) = error {
            failures.push(LandscapeFailure {
                landscape: landscapes[l].id().to_string(),
                error: error.clone(),
            });
        }
    }
    pairs.retain(|(l, _)| failed[*l].is_none());
    pairs.sort_by(|a, b| a.1 .0.sort_key().cmp(&b.1 .0.sort_key()));
    let (rows, traces): (Vec<Row>, Vec<TraceRecord>) = pairs.into_iter().map(|(_, p)| p).unzip();
    failures.sort_by(|a, b| a.landscape.cmp(&b.landscape));

    let mut sweeps: Vec<(String, SweepCurve)> = landscapes
        .iter()
        .zip(&failed)
        .filter(|(_, f)| f.is_none())
        .map(|(b, _)| (b.id().to_string(), b.sweep.clone()))
        .collect();
    sweeps.sort_by(|a, b| a.0.cmp(&b.0));
    let ids: Vec<String> = sweeps.iter().map(|(id, _)| id.clone()).collect();

    let summary = Summary {
        config_hash: config_hash(config),
        rows: rows.len(),
        landscapes: ids,
        failures,
        metrics: summarize(&rows),
    };
    Ok(ResultsTable {
        config: config.clone(),
        rows,
        traces,
        sweeps,
        summary,
    })
}
