//! `tradeoff`: run λ-search experiments, sweep landscapes, inspect results
//! and serve live sessions.
//!
//! Exit codes: 0 on success, 1 for configuration or usage errors, 2 for
//! runtime failures (including landscapes that failed during a run).

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use tradeoff_core::harness::{
    build_landscape, emit_report, format_table, instantiate, oracle_stream, read_rows, read_summary, run_experiment,
    summarize, sweep, write_sweep, ExperimentConfig, HarnessError,
};
use tradeoff_service::{Registry, SessionManager};

#[derive(Parser, Debug)]
#[command(name = "tradeoff", version, about = "Runtime trade-off search laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every strategy on every landscape and seed, then write a report.
    Run {
        /// Experiment config (TOML); the built-in default suite when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print a landscape's λ sweep as CSV.
    Sweep {
        #[arg(long)]
        landscape: String,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Episodes averaged per grid point; the config's oracle setting by default.
        #[arg(long)]
        episodes: Option<usize>,
        /// Write to this file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute aggregates from a results directory and print them.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Serve the session API over the config's landscapes.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Summary,
}

/// Failure classes, mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

/// Reads and validates a config; every problem here is a config error.
fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    let config = match path {
        Some(path) => ExperimentConfig::load(path).map_err(|e| Failure::Config(e.to_string()))?,
        None => ExperimentConfig::default(),
    };
    config.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(config)
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => {
            let mut config = load_config(config.as_deref())?;
            if let Some(workers) = workers {
                config.workers = Some(workers);
            }
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if config.cache_dir.is_none() {
                config.cache_dir = Some(out.join("cache"));
            }
            config.validate().map_err(|e| Failure::Config(e.to_string()))?;
            let results = run_experiment(&config)?;
            emit_report(&results, &out)?;
            print!("{}", format_table(&results.summary));
            println!("wrote {} rows to {}", results.rows.len(), out.display());
            if !results.summary.failures.is_empty() {
                for f in &results.summary.failures {
                    eprintln!("landscape {} failed: {}", f.landscape, f.error);
                }
                return Err(Failure::Runtime(format!(
                    "{} landscape(s) failed",
                    results.summary.failures.len()
                )));
            }
            Ok(())
        }
        Command::Sweep {
            landscape,
            resolution,
            config,
            episodes,
            out,
        } => {
            let config = load_config(config.as_deref())?;
            if resolution < 2 {
                return Err(Failure::Config(format!("resolution must be at least 2, got {resolution}")));
            }
            if episodes == Some(0) {
                return Err(Failure::Config("episodes must be positive".into()));
            }
            let entry = config
                .landscapes
                .iter()
                .find(|e| e.id() == landscape)
                .ok_or_else(|| Failure::Config(format!("no landscape `{landscape}` in the config")))?;
            let built = instantiate(entry, &config)?;
            let mut rng = oracle_stream(&config, entry.id());
            let episodes = episodes.unwrap_or(config.oracle.episodes_per_point);
            let curve = sweep(built.as_ref(), resolution, episodes, &mut rng).map_err(HarnessError::from)?;
            match out {
                Some(path) => write_sweep(&curve, &path)?,
                None => {
                    println!("lambda,return{}", if curve.proximity.is_some() { ",proximity" } else { "" });
                    for i in 0..curve.len() {
                        match &curve.proximity {
                            Some(p) => println!("{:?},{:?},{:?}", curve.lambda[i], curve.mean_return[i], p[i]),
                            None => println!("{:?},{:?}", curve.lambda[i], curve.mean_return[i]),
                        }
                    }
                }
            }
            Ok(())
        }
        Command::Report { results, format } => {
            let rows = read_rows(&results.join("rows.csv"))?;
            let mut summary = read_summary(&results.join("summary.json"))?;
            let recomputed = summarize(&rows);
            if recomputed != summary.metrics || rows.len() != summary.rows {
                return Err(Failure::Runtime(format!(
                    "{}: summary.json disagrees with aggregates recomputed from rows.csv",
                    results.display()
                )));
            }
            summary.metrics = recomputed;
            match format {
                Format::Table => print!("{}", format_table(&summary)),
                Format::Summary => {
                    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"))
                }
            }
            Ok(())
        }
        Command::Serve { port, host, config } => {
            let config = load_config(config.as_deref())?;
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| Failure::Config(format!("bad address {host}:{port}: {e}")))?;
            let mut built = Vec::with_capacity(config.landscapes.len());
            for entry in &config.landscapes {
                eprintln!("preparing {}", entry.id());
                built.push(build_landscape(entry, &config)?);
            }
            let manager = Arc::new(SessionManager::new(Arc::new(Registry::new(built, config.episodes_per_eval))));
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Runtime(e.to_string()))?;
            eprintln!("listening on http://{addr}");
            runtime
                .block_on(tradeoff_service::serve(manager, addr))
                .map_err(|e| Failure::Runtime(format!("{addr}: {e}")))
        }
    }
}
