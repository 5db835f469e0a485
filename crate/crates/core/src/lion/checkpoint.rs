//! Line-oriented text checkpoints for trained artifacts.
//!
//! ```text
//! tradeoff-checkpoint 1
//! config {...json...}
//! reports [...json...]
//! log {...json...}
//! probes <n>
//! <x> <y>                       (n lines)
//! network <name>
//! shape <inputs> <hidden> <outputs> <activation>
//! input_shift <values...>
//! input_scale <values...>
//! output_shift <values...>
//! output_scale <values...>
//! w1 <values...>                (one line per hidden unit)
//! b1 <values...>
//! w2 <values...>                (one line per output)
//! b2 <values...>
//! end
//! ```
//!
//! Network blocks appear in the order `behavior`, `member` (K times),
//! `policy`. Floats are written with Rust's shortest round-trip formatting,
//! so a saved checkpoint reloads bit-for-bit.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::models::{BehaviorModel, ConditionedPolicy, TransitionEnsemble, TransitionModel};
use super::nn::{Activation, Affine, Mlp, Network};
use super::{LionArtifacts, LionError};

const MAGIC: &str = "tradeoff-checkpoint 1";

fn join(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v:?}").expect("writing to a string");
    }
    out
}

fn io_error(e: std::io::Error) -> LionError {
    LionError::Format(format!("i/o: {e}"))
}

fn write_network(out: &mut String, name: &str, net: &Network) {
    let mlp = &net.mlp;
    let (i, h, o) = (mlp.inputs(), mlp.hidden(), mlp.outputs());
    let p = mlp.params();
    let _ = writeln!(out, "network {name}");
    let _ = writeln!(out, "shape {i} {h} {o} {}", mlp.activation().as_str());
    let _ = writeln!(out, "input_shift {}", join(&net.input.shift));
    let _ = writeln!(out, "input_scale {}", join(&net.input.scale));
    let _ = writeln!(out, "output_shift {}", join(&net.output.shift));
    let _ = writeln!(out, "output_scale {}", join(&net.output.scale));
    for row in p[..h * i].chunks(i) {
        let _ = writeln!(out, "w1 {}", join(row));
    }
    let _ = writeln!(out, "b1 {}", join(&p[h * i..h * i + h]));
    let w2 = h * i + h;
    for row in p[w2..w2 + o * h].chunks(h) {
        let _ = writeln!(out, "w2 {}", join(row));
    }
    let _ = writeln!(out, "b2 {}", join(&p[w2 + o * h..]));
    out.push_str("end\n");
}

/// Serializes `artifacts` to `writer`.
pub fn save(artifacts: &LionArtifacts, mut writer: impl Write) -> Result<(), LionError> {
    let json = |v: Result<String, serde_json::Error>| v.map_err(|e| LionError::Format(e.to_string()));
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "config {}", json(serde_json::to_string(&artifacts.config))?);
    let _ = writeln!(out, "reports {}", json(serde_json::to_string(&artifacts.member_reports))?);
    let _ = writeln!(out, "log {}", json(serde_json::to_string(&artifacts.log))?);
    let _ = writeln!(out, "probes {}", artifacts.heldout_states.len());
    for s in &artifacts.heldout_states {
        let _ = writeln!(out, "{}", join(s));
    }
    write_network(&mut out, "behavior", &artifacts.behavior.network);
    for m in &artifacts.ensemble.members {
        write_network(&mut out, "member", &m.network);
    }
    write_network(&mut out, "policy", &artifacts.policy.network);
    writer.write_all(out.as_bytes()).map_err(io_error)
}

struct Lines {
    lines: Vec<String>,
    at: usize,
}

impl Lines {
    fn next(&mut self) -> Result<&str, LionError> {
        let line = self
            .lines
            .get(self.at)
            .ok_or_else(|| LionError::Format("unexpected end of checkpoint".into()))?;
        self.at += 1;
        Ok(line.as_str())
    }

    fn peek(&self) -> Option<&str> {
        self.lines.get(self.at).map(String::as_str)
    }

    fn fail<T>(&self, what: impl std::fmt::Display) -> Result<T, LionError> {
        Err(LionError::Format(format!("line {}: {what}", self.at)))
    }

    /// Returns the rest of a line that starts with `key`.
    fn keyed(&mut self, key: &str) -> Result<String, LionError> {
        let line = self.next()?.to_string();
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.to_string()),
            _ if line == key => Ok(String::new()),
            _ => self.fail(format!("expected `{key}`")),
        }
    }

    fn floats(&mut self, key: &str, len: usize) -> Result<Vec<f64>, LionError> {
        let rest = self.keyed(key)?;
        let values = parse_floats(&rest).or_else(|e| self.fail(e))?;
        if values.len() != len {
            return self.fail(format!("`{key}` has {} values, expected {len}", values.len()));
        }
        Ok(values)
    }
}

fn parse_floats(text: &str) -> Result<Vec<f64>, String> {
    text.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}")))
        .collect()
}

fn read_network(lines: &mut Lines, name: &str) -> Result<Network, LionError> {
    let header = lines.keyed("network")?;
    if header != name {
        return lines.fail(format!("expected network `{name}`, found `{header}`"));
    }
    let shape = lines.keyed("shape")?;
    let parts: Vec<&str> = shape.split_whitespace().collect();
    let dims: Option<Vec<usize>> = parts.iter().take(3).map(|p| p.parse().ok()).collect();
    let (Some(dims), 4) = (dims, parts.len()) else {
        return lines.fail("malformed `shape` line");
    };
    let activation = match parts[3] {
        "tanh" => Activation::Tanh,
        "identity" => Activation::Identity,
        other => return lines.fail(format!("unknown activation `{other}`")),
    };
    let (i, h, o) = (dims[0], dims[1], dims[2]);
    let input = Affine {
        shift: lines.floats("input_shift", i)?,
        scale: lines.floats("input_scale", i)?,
    };
    let output = Affine {
        shift: lines.floats("output_shift", o)?,
        scale: lines.floats("output_scale", o)?,
    };
    let mut params = Vec::with_capacity(Mlp::param_count(i, h, o));
    for _ in 0..h {
        params.extend(lines.floats("w1", i)?);
    }
    params.extend(lines.floats("b1", h)?);
    for _ in 0..o {
        params.extend(lines.floats("w2", h)?);
    }
    params.extend(lines.floats("b2", o)?);
    lines.keyed("end")?;
    let mlp = Mlp::from_params(i, h, o, activation, params).expect("parameter count matches shape");
    Ok(Network { mlp, input, output })
}

/// Reads artifacts written by [`save`].
pub fn load(reader: impl BufRead) -> Result<LionArtifacts, LionError> {
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>().map_err(io_error)?;
    let mut lines = Lines { lines, at: 0 };
    if lines.next()? != MAGIC {
        return lines.fail(format!("missing `{MAGIC}` header"));
    }
    let json_err = |e: serde_json::Error| LionError::Format(e.to_string());
    let config = serde_json::from_str(&lines.keyed("config")?).map_err(json_err)?;
    let member_reports = serde_json::from_str(&lines.keyed("reports")?).map_err(json_err)?;
    let log = serde_json::from_str(&lines.keyed("log")?).map_err(json_err)?;
    let count: usize = match lines.keyed("probes")?.parse() {
        Ok(n) => n,
        Err(_) => return lines.fail("malformed probe count"),
    };
    let mut heldout_states = Vec::with_capacity(count);
    for _ in 0..count {
        let values = parse_floats(lines.next()?).or_else(|e| lines.fail(e))?;
        match values[..] {
            [x, y] => heldout_states.push([x, y]),
            _ => return lines.fail("probe states have two coordinates"),
        }
    }
    let behavior = BehaviorModel {
        network: read_network(&mut lines, "behavior")?,
    };
    let mut members = Vec::new();
    while lines.peek() == Some("network member") {
        members.push(TransitionModel {
            network: read_network(&mut lines, "member")?,
        });
    }
    let ensemble = TransitionEnsemble::new(members)?;
    let policy = ConditionedPolicy {
        network: read_network(&mut lines, "policy")?,
    };
    if lines.peek().is_some_and(|l| !l.trim().is_empty()) {
        return lines.fail("trailing content after the policy network");
    }
    Ok(LionArtifacts {
        config,
        ensemble,
        member_reports,
        behavior,
        policy,
        log,
        heldout_states,
    })
}

/// Writes a checkpoint file.
pub fn save_file(artifacts: &LionArtifacts, path: &std::path::Path) -> Result<(), LionError> {
    let file = std::fs::File::create(path).map_err(io_error)?;
    save(artifacts, std::io::BufWriter::new(file))
}

/// Reads a checkpoint file.
pub fn load_file(path: &std::path::Path) -> Result<LionArtifacts, LionError> {
    let file = std::fs::File::open(path).map_err(io_error)?;
    load(std::io::BufReader::new(file))
}
