use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::landscape::{Bump, Shape, SyntheticSpec};
use crate::lion::{BehavioralKind, LionConfig};
use crate::search::{StrategyConfig, StrategyKind};

/// Grid settings for the brute-force oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSettings {
    pub resolution: usize,
    pub episodes_per_point: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            resolution: 101,
            episodes_per_point: 32,
        }
    }
}

/// One landscape of the suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LandscapeEntry {
    Synthetic {
        id: String,
        curve: Shape,
        #[serde(default)]
        noise_sigma: f64,
    },
    /// A policy trained by the LION pipeline, deployed on the toy task.
    Lion {
        id: String,
        #[serde(default)]
        lion: LionConfig,
    },
}

impl LandscapeEntry {
    pub fn id(&self) -> &str {
        match self {
            LandscapeEntry::Synthetic { id, .. } | LandscapeEntry::Lion { id, .. } => id,
        }
    }

    pub fn synthetic(id: &str, curve: Shape, noise_sigma: f64) -> Self {
        LandscapeEntry::Synthetic {
            id: id.to_string(),
            curve,
            noise_sigma,
        }
    }

    pub fn lion(id: &str, behavioral: BehavioralKind, epsilon: f64) -> Self {
        LandscapeEntry::Lion {
            id: id.to_string(),
            lion: LionConfig {
                behavioral,
                epsilon,
                ..LionConfig::default()
            },
        }
    }

    pub fn spec(&self) -> Option<SyntheticSpec> {
        match *self {
            LandscapeEntry::Synthetic {
                curve, noise_sigma, ..
            } => Some(SyntheticSpec { curve, noise_sigma }),
            LandscapeEntry::Lion { .. } => None,
        }
    }
}

/// The eight synthetic curves of the default suite, all with noise `sigma`.
///
/// Each family appears twice except monotone and plateau, which have a
/// single meaningful orientation here.
pub fn synthetic_suite(sigma: f64) -> Vec<LandscapeEntry> {
    let bump = |center, height, width| Bump { center, height, width };
    let curves = [
        (
            "monotone",
            Shape::Monotone {
                start: 0.2,
                end: 1.0,
                exponent: 0.5,
            },
        ),
        (
            "unimodal-low",
            Shape::Unimodal {
                peak: 0.3,
                height: 1.0,
                curvature: 4.0,
            },
        ),
        (
            "unimodal-high",
            Shape::Unimodal {
                peak: 0.7,
                height: 1.0,
                curvature: 3.0,
            },
        ),
        (
            "plateau",
            Shape::Plateau {
                start: 0.3,
                level: 1.0,
                knee: 0.4,
                decline: 0.5,
            },
        ),
        (
            "cliff-early",
            Shape::Cliff {
                start: 0.3,
                peak: 1.0,
                edge: 0.6,
                floor: -0.5,
            },
        ),
        (
            "cliff-late",
            Shape::Cliff {
                start: 0.5,
                peak: 0.9,
                edge: 0.85,
                floor: 0.0,
            },
        ),
        (
            "bimodal-right",
            Shape::Bimodal {
                base: 0.0,
                left: bump(0.2, 0.6, 0.08),
                right: bump(0.75, 1.0, 0.08),
            },
        ),
        (
            "bimodal-left",
            Shape::Bimodal {
                base: 0.2,
                left: bump(0.25, 0.9, 0.1),
                right: bump(0.8, 0.6, 0.1),
            },
        ),
    ];
    curves
        .into_iter()
        .map(|(name, curve)| {
            let id = if sigma == 0.0 {
                name.to_string()
            } else {
                format!("{name}-s{sigma}")
            };
            LandscapeEntry::synthetic(&id, curve, sigma)
        })
        .collect()
}

/// The two toy LION landscapes of the default suite.
pub fn lion_suite() -> Vec<LandscapeEntry> {
    vec![
        LandscapeEntry::lion("lion-mediocre-e0.2", BehavioralKind::Mediocre, 0.2),
        LandscapeEntry::lion("lion-bad-e0.4", BehavioralKind::Bad, 0.4),
    ]
}

/// Full experiment description; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Master seed; every row, oracle and landscape stream derives from it.
    pub seed: u64,
    /// Seed indices; each (landscape, strategy, seed) triple is one row.
    pub seeds: Vec<u64>,
    pub budget_unconstrained: usize,
    pub budget_limited: usize,
    /// Episodes averaged per search evaluation.
    pub episodes_per_eval: usize,
    /// Episodes used to measure the return of a recommendation.
    pub final_episodes: usize,
    pub oracle: OracleSettings,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
    /// Directory for trained LION checkpoints keyed by config hash.
    pub cache_dir: Option<PathBuf>,
    pub strategies: Vec<StrategyConfig>,
    pub landscapes: Vec<LandscapeEntry>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut landscapes: Vec<LandscapeEntry> = Vec::new();
        for (i, entry) in synthetic_suite(0.0).into_iter().zip(synthetic_suite(0.05)).enumerate() {
            landscapes.push(if i % 2 == 0 { entry.0 } else { entry.1 });
        }
        landscapes.extend(lion_suite());
        Self {
            seed: 0,
            seeds: (0..20).collect(),
            budget_unconstrained: 50,
            budget_limited: 10,
            episodes_per_eval: 1,
            final_episodes: 32,
            oracle: OracleSettings::default(),
            workers: None,
            cache_dir: None,
            strategies: StrategyKind::ALL.iter().map(|&k| StrategyConfig::default_for(k)).collect(),
            landscapes,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.seeds.is_empty() {
            return fail("seeds must not be empty".into());
        }
        if self.strategies.is_empty() {
            return fail("at least one strategy is required".into());
        }
        if self.landscapes.is_empty() {
            return fail("at least one landscape is required".into());
        }
        if self.episodes_per_eval == 0 || self.final_episodes == 0 || self.oracle.episodes_per_point == 0 {
            return fail("episode counts must be positive".into());
        }
        if self.oracle.resolution < 2 {
            return fail(format!("oracle resolution must be at least 2, got {}", self.oracle.resolution));
        }
        if self.workers == Some(0) {
            return fail("workers must be positive".into());
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return fail(format!("seed {s} is listed twice"));
            }
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].iter().any(|o| o.kind() == s.kind()) {
                return fail(format!("strategy `{}` is listed twice", s.kind()));
            }
            s.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            for budget in [self.budget_unconstrained, self.budget_limited] {
                let minimum = s.minimum_budget(budget);
                if budget < minimum {
                    return fail(format!("strategy `{}` needs a budget of at least {minimum}, got {budget}", s.kind()));
                }
            }
        }
        for (i, l) in self.landscapes.iter().enumerate() {
            let id = l.id();
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return fail(format!("landscape id `{id}` must be non-empty and use only [A-Za-z0-9-_.]"));
            }
            if self.landscapes[..i].iter().any(|o| o.id() == id) {
                return fail(format!("landscape id `{id}` is listed twice"));
            }
            if let Some(spec) = l.spec() {
                spec.validate().map_err(|e| HarnessError::Config(format!("landscape `{id}`: {e}")))?;
            }
        }
        Ok(())
    }
}
