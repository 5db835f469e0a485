//! Black-box `λ → return` evaluation targets.
//!
//! A [`Landscape`] produces noisy episodic returns for a trade-off value.
//! Two families exist: parametric synthetic curves ([`SyntheticLandscape`])
//! and deployed λ-conditioned policies (see [`crate::lion::PolicyLandscape`]).
//! [`oracle_grid`] evaluates a landscape on a dense grid and defines the best
//! achievable return used by the regret metrics.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Stream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LandscapeError {
    #[error("trade-off value {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("invalid synthetic landscape: {0}")]
    InvalidSpec(String),
    #[error("episode count must be at least 1")]
    NoEpisodes,
    #[error("oracle resolution must be at least 2, got {0}")]
    Resolution(usize),
}

/// A trade-off value λ in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TradeOff(f64);

impl TradeOff {
    pub const ZERO: TradeOff = TradeOff(0.0);
    pub const HALF: TradeOff = TradeOff(0.5);
    pub const ONE: TradeOff = TradeOff(1.0);

    /// Rejects values outside `[0, 1]` (and NaN).
    pub fn new(value: f64) -> Result<Self, LandscapeError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(LandscapeError::OutOfRange(value))
        }
    }

    /// Clamps into `[0, 1]`; NaN maps to 0. Intended for user-input paths.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            Self(0.0)
        } else {
            Self(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TradeOff {
    type Error = LandscapeError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<TradeOff> for f64 {
    fn from(t: TradeOff) -> f64 {
        t.0
    }
}

impl fmt::Display for TradeOff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A seedable black box mapping λ to episodic returns.
///
/// Implementations are immutable; all randomness comes from the caller's
/// stream, so one landscape can be shared by many workers.
pub trait Landscape: Send + Sync + fmt::Debug {
    /// Return of a single episode at `lambda`.
    fn episode(&self, lambda: TradeOff, rng: &mut Stream) -> f64;

    /// Noise-free expected return, when known analytically.
    fn expected_return(&self, _lambda: TradeOff) -> Option<f64> {
        None
    }

    /// Distance of the deployed behavior to the behavioral policy at `lambda`,
    /// when the landscape wraps a trained policy.
    fn proximity(&self, _lambda: TradeOff) -> Option<f64> {
        None
    }
}

/// One costed evaluation of a landscape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnSample {
    pub lambda: TradeOff,
    /// Arithmetic mean over `episode_count` episodes.
    pub observed_return: f64,
    pub episode_count: usize,
    /// Seed of the stream the episodes were drawn from.
    pub seed: u64,
}

/// Evaluates `episodes` independent episodes at `lambda` and averages them.
pub fn evaluate(
    landscape: &dyn Landscape,
    lambda: TradeOff,
    episodes: usize,
    rng: &mut Stream,
) -> Result<ReturnSample, LandscapeError> {
    if episodes == 0 {
        return Err(LandscapeError::NoEpisodes);
    }
    let total: f64 = (0..episodes).map(|_| landscape.episode(lambda, rng)).sum();
    Ok(ReturnSample {
        lambda,
        observed_return: total / episodes as f64,
        episode_count: episodes,
        seed: rng.seed(),
    })
}

/// Peak of a Gaussian bump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: f64,
    pub height: f64,
    pub width: f64,
}

/// Analytic mean curves for synthetic landscapes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// `start + (end - start) * λ^exponent`. A constant curve has `start == end`.
    Monotone { start: f64, end: f64, exponent: f64 },
    /// `height - curvature * (λ - peak)^2`.
    Unimodal {
        peak: f64,
        height: f64,
        curvature: f64,
    },
    /// Linear ramp from `start` at 0 to `level` at `knee`, then
    /// `level - decline * (λ - knee)`.
    Plateau {
        start: f64,
        level: f64,
        knee: f64,
        decline: f64,
    },
    /// Linear ramp from `start` at 0 to `peak` at `edge`; `floor` beyond it.
    Cliff {
        start: f64,
        peak: f64,
        edge: f64,
        floor: f64,
    },
    /// `base` plus two Gaussian bumps.
    Bimodal { base: f64, left: Bump, right: Bump },
}

impl Shape {
    /// Mean return at `lambda`.
    pub fn mean(&self, lambda: f64) -> f64 {
        match *self {
            Shape::Monotone {
                start,
                end,
                exponent,
            } => start + (end - start) * lambda.powf(exponent),
            Shape::Unimodal {
                peak,
                height,
                curvature,
            } => height - curvature * (lambda - peak).powi(2),
            Shape::Plateau {
                start,
                level,
                knee,
                decline,
            } => {
                if lambda <= knee {
                    start + (level - start) * lambda / knee
                } else {
                    level - decline * (lambda - knee)
                }
            }
            Shape::Cliff {
                start,
                peak,
                edge,
                floor,
            } => {
                if lambda <= edge {
                    start + (peak - start) * lambda / edge
                } else {
                    floor
                }
            }
            Shape::Bimodal { base, left, right } => {
                let bump = |b: Bump| b.height * (-(lambda - b.center).powi(2) / (2.0 * b.width * b.width)).exp();
                base + bump(left) + bump(right)
            }
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Shape::Monotone { .. } => "monotone",
            Shape::Unimodal { .. } => "unimodal",
            Shape::Plateau { .. } => "plateau",
            Shape::Cliff { .. } => "cliff",
            Shape::Bimodal { .. } => "bimodal",
        }
    }

    fn validate(&self) -> Result<(), String> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be finite, got {v}"))
            }
        };
        match *self {
            Shape::Monotone {
                start,
                end,
                exponent,
            } => {
                finite("start", start)?;
                finite("end", end)?;
                if !(exponent.is_finite() && exponent > 0.0) {
                    return Err(format!("exponent must be positive, got {exponent}"));
                }
            }
            Shape::Unimodal {
                peak,
                height,
                curvature,
            } => {
                finite("peak", peak)?;
                finite("height", height)?;
                if !(curvature.is_finite() && curvature >= 0.0) {
                    return Err(format!("curvature must be non-negative, got {curvature}"));
                }
            }
            Shape::Plateau {
                start,
                level,
                knee,
                decline,
            } => {
                finite("start", start)?;
                finite("level", level)?;
                finite("decline", decline)?;
                if !(knee > 0.0 && knee <= 1.0) {
                    return Err(format!("knee must lie in (0, 1], got {knee}"));
                }
            }
            Shape::Cliff {
                start,
                peak,
                edge,
                floor,
            } => {
                finite("start", start)?;
                finite("peak", peak)?;
                finite("floor", floor)?;
                if !(edge > 0.0 && edge < 1.0) {
                    return Err(format!("edge must lie in (0, 1), got {edge}"));
                }
            }
            Shape::Bimodal { base, left, right } => {
                finite("base", base)?;
                for b in [left, right] {
                    finite("center", b.center)?;
                    finite("height", b.height)?;
                    if !(b.width.is_finite() && b.width > 0.0) {
                        return Err(format!("bump width must be positive, got {}", b.width));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A synthetic curve plus additive Gaussian observation noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub curve: Shape,
    /// Standard deviation of per-episode noise, in return units.
    #[serde(default)]
    pub noise_sigma: f64,
}

impl SyntheticSpec {
    pub fn new(curve: Shape, noise_sigma: f64) -> Self {
        Self { curve, noise_sigma }
    }

    pub fn validate(&self) -> Result<(), LandscapeError> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(LandscapeError::InvalidSpec(format!(
                "noise_sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        self.curve.validate().map_err(LandscapeError::InvalidSpec)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticLandscape {
    spec: SyntheticSpec,
    seed: u64,
}

impl SyntheticLandscape {
    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    /// A fresh stream from the landscape's own seed.
    pub fn stream(&self) -> Stream {
        Stream::new(self.seed)
    }
}

impl Landscape for SyntheticLandscape {
    fn episode(&self, lambda: TradeOff, rng: &mut Stream) -> f64 {
        let mean = self.spec.curve.mean(lambda.value());
        if self.spec.noise_sigma == 0.0 {
            mean
        } else {
            mean + self.spec.noise_sigma * rng.normal()
        }
    }

    fn expected_return(&self, lambda: TradeOff) -> Option<f64> {
        Some(self.spec.curve.mean(lambda.value()))
    }
}

/// Builds a synthetic landscape after validating its parameters.
pub fn make_synthetic(spec: SyntheticSpec, seed: u64) -> Result<SyntheticLandscape, LandscapeError> {
    spec.validate()?;
    Ok(SyntheticLandscape { spec, seed })
}

/// Brute-force grid evaluation of a landscape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleProfile {
    pub grid: Vec<TradeOff>,
    pub mean_returns: Vec<f64>,
    pub best_lambda: TradeOff,
    pub best_return: f64,
}

impl OracleProfile {
    /// Mean return at the grid point `λ = 0`.
    pub fn behavioral_return(&self) -> f64 {
        self.mean_returns[0]
    }
}

/// Evaluates `resolution` equally spaced points covering `[0, 1]`.
///
/// Ties for the best return go to the lowest grid index.
pub fn oracle_grid(
    landscape: &dyn Landscape,
    resolution: usize,
    episodes_per_point: usize,
    rng: &mut Stream,
) -> Result<OracleProfile, LandscapeError> {
    if resolution < 2 {
        return Err(LandscapeError::Resolution(resolution));
    }
    let last = (resolution - 1) as f64;
    let grid: Vec<TradeOff> = (0..resolution)
        .map(|i| TradeOff::clamped(i as f64 / last))
        .collect();
    let mean_returns = grid
        .iter()
        .map(|&lambda| evaluate(landscape, lambda, episodes_per_point, rng).map(|s| s.observed_return))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = 0;
    for (i, &r) in mean_returns.iter().enumerate() {
        if r > mean_returns[best] {
            best = i;
        }
    }
    Ok(OracleProfile {
        best_lambda: grid[best],
        best_return: mean_returns[best],
        grid,
        mean_returns,
    })
}
