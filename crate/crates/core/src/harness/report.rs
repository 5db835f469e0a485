//! Result files.
//!
//! ```text
//! <dir>/rows.csv          one row per (landscape, strategy, seed)
//! <dir>/summary.json      normalized aggregates per strategy and metric
//! <dir>/traces.jsonl      full and capped trace of every row
//! <dir>/sweeps/<id>.csv   lambda,return[,proximity] per landscape
//! <dir>/config.toml       the experiment that produced the files
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::run::{ResultsTable, Row, Summary, METRICS};
use super::suite::SweepCurve;
use super::HarnessError;

fn create(path: &Path) -> Result<BufWriter<fs::File>, HarnessError> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| HarnessError::io(path, e))
}

fn finish(mut w: BufWriter<fs::File>, path: &Path) -> Result<(), HarnessError> {
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_rows(rows: &[Row], path: &Path) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(create(path)?);
    for row in rows {
        out.serialize(row).map_err(|e| HarnessError::csv(path, e))?;
    }
    let inner = out.into_inner().map_err(|e| HarnessError::io(path, e.into_error()))?;
    finish(inner, path)
}

pub fn read_rows(path: &Path) -> Result<Vec<Row>, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    reader
        .deserialize()
        .collect::<Result<Vec<Row>, _>>()
        .map_err(|e| HarnessError::csv(path, e))
}

pub fn write_sweep(curve: &SweepCurve, path: &Path) -> Result<(), HarnessError> {
    let mut text = String::new();
    text.push_str(if curve.proximity.is_some() {
        "lambda,return,proximity\n"
    } else {
        "lambda,return\n"
    });
    for i in 0..curve.len() {
        let _ = write!(text, "{:?},{:?}", curve.lambda[i], curve.mean_return[i]);
        if let Some(p) = &curve.proximity {
            let _ = write!(text, ",{:?}", p[i]);
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn read_sweep(path: &Path) -> Result<SweepCurve, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let headers = reader.headers().map_err(|e| HarnessError::csv(path, e))?.clone();
    let with_proximity = headers.len() == 3;
    let mut curve = SweepCurve {
        lambda: Vec::new(),
        mean_return: Vec::new(),
        proximity: with_proximity.then(Vec::new),
    };
    for record in reader.deserialize::<Vec<f64>>() {
        let record = record.map_err(|e| HarnessError::csv(path, e))?;
        if record.len() != headers.len() {
            return Err(HarnessError::Format(format!("{}: ragged sweep row", path.display())));
        }
        curve.lambda.push(record[0]);
        curve.mean_return.push(record[1]);
        if let Some(p) = curve.proximity.as_mut() {
            p.push(record[2]);
        }
    }
    Ok(curve)
}

pub fn read_summary(path: &Path) -> Result<Summary, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Format(format!("{}: {e}", path.display())))
}

/// Writes every result file into `dir`, creating it if needed.
pub fn emit_report(results: &ResultsTable, dir: &Path) -> Result<(), HarnessError> {
    let sweeps_dir = dir.join("sweeps");
    fs::create_dir_all(&sweeps_dir).map_err(|e| HarnessError::io(&sweeps_dir, e))?;
    write_rows(&results.rows, &dir.join("rows.csv"))?;

    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&results.summary).expect("summary serializes");
    fs::write(&path, json + "\n").map_err(|e| HarnessError::io(&path, e))?;

    let path = dir.join("traces.jsonl");
    let mut out = create(&path)?;
    for record in &results.traces {
        let line = serde_json::to_string(record).expect("trace serializes");
        writeln!(out, "{line}").map_err(|e| HarnessError::io(&path, e))?;
    }
    finish(out, &path)?;

    for (id, curve) in &results.sweeps {
        write_sweep(curve, &sweeps_dir.join(format!("{id}.csv")))?;
    }
    let path = dir.join("config.toml");
    let mut config = results.config.clone();
    config.workers = None;
    fs::write(&path, config.to_toml()).map_err(|e| HarnessError::io(&path, e))
}

/// Number of lines in the trace log.
pub fn count_traces(path: &Path) -> Result<usize, HarnessError> {
    let file = fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut n = 0;
    for line in BufReader::new(file).lines() {
        if !line.map_err(|e| HarnessError::io(path, e))?.trim().is_empty() {
            n += 1;
        }
    }
    Ok(n)
}

/// Plain-text table of a summary's aggregates: one line per strategy.
pub fn format_table(summary: &Summary) -> String {
    let mut kinds = Vec::new();
    for m in &summary.metrics {
        for s in &m.strategies {
            if !kinds.contains(&s.strategy) {
                kinds.push(s.strategy);
            }
        }
    }
    let mut out = String::new();
    let _ = write!(out, "{:<10}", "strategy");
    for name in METRICS {
        let _ = write!(out, " {:>19}", name);
    }
    out.push('\n');
    for kind in kinds {
        let _ = write!(out, "{:<10}", kind.as_str());
        for name in METRICS {
            match summary.metric(name).and_then(|m| m.get(kind)) {
                Some(a) => {
                    let _ = write!(out, " {:>9.4} ± {:<7.4}", a.mean, a.stderr);
                }
                None => {
                    let _ = write!(out, " {:>19}", "-");
                }
            }
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "{} rows over {} landscapes; normalized per landscape, mean ± standard error",
        summary.rows,
        summary.landscapes.len()
    );
    for f in &summary.failures {
        let _ = writeln!(out, "failed: {}: {}", f.landscape, f.error);
    }
    out
}
