use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use tradeoff_core::harness::{
    count_traces, emit_report, instantiate, load_or_train, oracle_stream, proximity_endpoints, read_rows, read_summary,
    read_sweep, run_experiment, summarize, sweep, synthetic_suite, ExperimentConfig, HarnessError, LandscapeEntry,
    Row, METRICS,
};
use tradeoff_core::landscape::Shape;
use tradeoff_core::lion::LionConfig;
use tradeoff_core::search::{StrategyConfig, StrategyKind};

fn small(landscapes: Vec<LandscapeEntry>, kinds: &[StrategyKind], seeds: u64) -> ExperimentConfig {
    ExperimentConfig {
        seeds: (0..seeds).collect(),
        strategies: kinds.iter().map(|&k| StrategyConfig::default_for(k)).collect(),
        landscapes,
        oracle: tradeoff_core::harness::OracleSettings {
            resolution: 51,
            episodes_per_point: 8,
        },
        final_episodes: 8,
        ..ExperimentConfig::default()
    }
}

fn identity() -> LandscapeEntry {
    LandscapeEntry::synthetic(
        "identity",
        Shape::Monotone {
            start: 0.0,
            end: 1.0,
            exponent: 1.0,
        },
        0.0,
    )
}

#[test]
fn inc_con_on_one_unimodal_landscape() {
    let curve = Shape::Unimodal {
        peak: 0.42,
        height: 2.0,
        curvature: 5.0,
    };
    let config = small(vec![LandscapeEntry::synthetic("hill", curve, 0.0)], &[StrategyKind::IncCon], 1);
    let results = run_experiment(&config).unwrap();
    assert_eq!(results.rows.len(), 1);
    let row = &results.rows[0];
    assert_eq!(row.mean_behavioral_regret, 0.0);
    assert!((row.final_return - curve.mean(row.recommendation)).abs() < 1e-12);
    // The walk stops at the first decrease, one step past the peak.
    assert!((row.recommendation - 0.40).abs() < 1e-9, "{}", row.recommendation);
}

#[test]
fn full_suite_cardinality() {
    let mut config = small(synthetic_suite(0.05), &StrategyKind::ALL, 20);
    config.oracle.resolution = 21;
    let results = run_experiment(&config).unwrap();
    assert_eq!(results.rows.len(), 8 * 7 * 20);
    assert_eq!(results.traces.len(), results.rows.len());
    assert!(results.summary.failures.is_empty());
    let mut keys: Vec<(String, StrategyKind, u64)> =
        results.rows.iter().map(|r| (r.landscape.clone(), r.strategy, r.seed)).collect();
    keys.dedup();
    assert_eq!(keys.len(), 1120);
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path.strip_prefix(dir).unwrap().display().to_string();
                files.insert(key, fs::read(&path).unwrap());
            }
        }
    }
    files
}

#[test]
fn runs_are_byte_identical_across_repeats_and_worker_counts() {
    let mut landscapes = synthetic_suite(0.05);
    landscapes.truncate(3);
    let base = small(landscapes, &StrategyKind::ALL, 3);
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, workers) in dirs.iter().zip([1, 1, 4]) {
        let config = ExperimentConfig {
            workers: Some(workers),
            ..base.clone()
        };
        emit_report(&run_experiment(&config).unwrap(), dir.path()).unwrap();
    }
    let first = read_dir_bytes(dirs[0].path());
    assert!(first.contains_key("rows.csv") && first.contains_key("summary.json"));
    for dir in &dirs[1..] {
        assert_eq!(read_dir_bytes(dir.path()), first);
    }
}

#[test]
fn sweep_of_identity_curve() {
    let config = small(vec![identity()], &[StrategyKind::Scr], 1);
    let landscape = instantiate(&config.landscapes[0], &config).unwrap();
    let curve = sweep(landscape.as_ref(), 5, 3, &mut oracle_stream(&config, "identity")).unwrap();
    assert_eq!(curve.lambda, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert_eq!(curve.mean_return, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert!(curve.proximity.is_none());
    assert!(sweep(landscape.as_ref(), 1, 3, &mut oracle_stream(&config, "identity")).is_err());
}

#[test]
fn lion_sweep_reports_proximity_and_reuses_the_cache() {
    let cache = tempfile::tempdir().unwrap();
    let lion = LionConfig::default();
    let trained = load_or_train(&lion, Some(cache.path())).unwrap();
    let files: Vec<_> = fs::read_dir(cache.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
    let cached = load_or_train(&lion, Some(cache.path())).unwrap();
    assert_eq!(cached, trained);

    let mut config = small(vec![LandscapeEntry::lion("toy", lion.behavioral, lion.epsilon)], &[StrategyKind::Scr], 1);
    config.cache_dir = Some(cache.path().to_path_buf());
    let landscape = instantiate(&config.landscapes[0], &config).unwrap();
    let curve = sweep(landscape.as_ref(), 6, 4, &mut oracle_stream(&config, "toy")).unwrap();
    let proximity = curve.proximity.expect("trained policies report proximity");
    assert_eq!(proximity.len(), 6);
    let (d0, d1) = proximity_endpoints(landscape.as_ref()).unwrap();
    assert_eq!(proximity[0], d0);
    assert_eq!(proximity[5], d1);
    assert!(d1 >= d0, "d(0) = {d0}, d(1) = {d1}");
}

/// Normalized aggregates computed directly from the row definitions.
fn independent_summary(rows: &[Row]) -> BTreeMap<(&'static str, StrategyKind), (f64, f64, usize)> {
    let mut by_landscape: BTreeMap<&str, BTreeMap<StrategyKind, Vec<&Row>>> = BTreeMap::new();
    for r in rows {
        by_landscape.entry(&r.landscape).or_default().entry(r.strategy).or_default().push(r);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut values: BTreeMap<(&'static str, StrategyKind), Vec<f64>> = BTreeMap::new();
    for groups in by_landscape.values() {
        let m = |f: fn(&Row) -> f64| -> BTreeMap<StrategyKind, f64> {
            groups
                .iter()
                .map(|(k, rs)| (*k, mean(&rs.iter().map(|r| f(r)).collect::<Vec<_>>())))
                .collect()
        };
        let r = m(|r| r.final_return);
        let rub = m(|r| r.return_under_budget);
        let mbr = m(|r| r.mean_behavioral_regret);
        let mor = m(|r| r.mean_optimal_regret);
        let span = |vals: &[f64]| {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        let joint: Vec<f64> = r.values().chain(rub.values()).copied().collect();
        let (lo, hi) = span(&joint);
        if hi > lo {
            for k in r.keys() {
                let nr = (r[k] - lo) / (hi - lo);
                let nrub = (rub[k] - lo) / (hi - lo);
                values.entry(("r", *k)).or_default().push(nr);
                values.entry(("rub", *k)).or_default().push(nrub);
                values.entry(("r_minus_rub", *k)).or_default().push(nr - nrub);
            }
        }
        for (name, metric) in [("mbr", &mbr), ("mor", &mor)] {
            let vals: Vec<f64> = metric.values().copied().collect();
            let (lo, hi) = span(&vals);
            if hi > lo {
                for (k, v) in metric {
                    values.entry((name, *k)).or_default().push((v - lo) / (hi - lo));
                }
            }
        }
    }
    values
        .into_iter()
        .map(|(key, v)| {
            let n = v.len();
            let m = mean(&v);
            let sd = if n > 1 {
                (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            (key, (m, sd / (n as f64).sqrt(), n))
        })
        .collect()
}

#[test]
fn emitted_report_round_trips_and_matches_recomputation() {
    let mut landscapes = synthetic_suite(0.05);
    landscapes.truncate(4);
    landscapes.push(identity());
    let config = small(landscapes, &StrategyKind::ALL, 4);
    let results = run_experiment(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&results, dir.path()).unwrap();

    let rows = read_rows(&dir.path().join("rows.csv")).unwrap();
    assert_eq!(rows, results.rows);
    assert_eq!(count_traces(&dir.path().join("traces.jsonl")).unwrap(), rows.len());
    let summary = read_summary(&dir.path().join("summary.json")).unwrap();
    assert_eq!(summary, results.summary);
    assert_eq!(summarize(&rows), summary.metrics);
    for (id, curve) in &results.sweeps {
        assert_eq!(&read_sweep(&dir.path().join("sweeps").join(format!("{id}.csv"))).unwrap(), curve);
    }
    let reloaded = ExperimentConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(reloaded, config);

    let oracle = independent_summary(&rows);
    let mut checked = 0;
    for name in METRICS {
        let metric = summary.metric(name).unwrap();
        for s in &metric.strategies {
            let (mean, stderr, n) = oracle[&(name, s.strategy)];
            assert_eq!(s.value.n, n, "{name} {}", s.strategy);
            assert!((s.value.mean - mean).abs() < 1e-12, "{name} {}", s.strategy);
            assert!((s.value.stderr - stderr).abs() < 1e-12, "{name} {}", s.strategy);
            checked += 1;
        }
        assert_eq!(metric.strategies.len(), 7);
    }
    assert_eq!(checked, 35);
}

#[test]
fn failing_landscape_is_isolated() {
    let broken = LandscapeEntry::Lion {
        id: "broken".into(),
        lion: LionConfig {
            epsilon: 2.0,
            ..LionConfig::default()
        },
    };
    let mut landscapes = synthetic_suite(0.0);
    landscapes.truncate(2);
    let clean = run_experiment(&small(landscapes.clone(), &[StrategyKind::Scr, StrategyKind::Pso], 3)).unwrap();
    landscapes.insert(1, broken);
    let mixed = run_experiment(&small(landscapes, &[StrategyKind::Scr, StrategyKind::Pso], 3)).unwrap();
    assert_eq!(mixed.summary.failures.len(), 1);
    assert_eq!(mixed.summary.failures[0].landscape, "broken");
    assert!(mixed.summary.failures[0].error.contains("epsilon"));
    assert_eq!(mixed.rows, clean.rows);
    assert!(mixed.sweeps.iter().all(|(id, _)| id != "broken"));
}

#[test]
fn unwritable_output_names_the_path() {
    let config = small(vec![identity()], &[StrategyKind::Scr], 1);
    let results = run_experiment(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "not a directory").unwrap();
    let err = emit_report(&results, &blocker.join("out")).unwrap_err();
    assert!(matches!(err, HarnessError::Io { .. }));
    assert!(err.to_string().contains("blocker"), "{err}");
}

#[test]
fn config_text_is_strict() {
    let err = ExperimentConfig::from_toml("seed = 1\nsurprise = true\n").unwrap_err();
    assert!(err.is_config());
    assert!(err.to_string().contains("surprise"), "{err}");

    let config = ExperimentConfig::from_toml("seed = 7\nseeds = [1, 2]\n").unwrap();
    assert_eq!(config.seed, 7);
    assert_eq!(config.seeds, vec![1, 2]);
    assert_eq!(config.landscapes, ExperimentConfig::default().landscapes);

    assert!(ExperimentConfig::from_toml("seeds = []\n").unwrap_err().is_config());
    assert!(ExperimentConfig::from_toml("budget_limited = 3\n").unwrap_err().is_config());
    let default = ExperimentConfig::default();
    assert_eq!(ExperimentConfig::from_toml(&default.to_toml()).unwrap(), default);
}

#[test]
fn shipped_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let config = ExperimentConfig::load(&path).unwrap();
    assert_eq!(config, ExperimentConfig::default());
}
