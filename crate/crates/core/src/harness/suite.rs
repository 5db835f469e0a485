use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, LandscapeEntry};
use super::HarnessError;
use crate::landscape::{make_synthetic, oracle_grid, Landscape, LandscapeError, OracleProfile, TradeOff};
use crate::lion::{checkpoint, train_lion, LionArtifacts, LionConfig};
use crate::metrics::References;
use crate::rng::{derive_seed, tags, Stream};

/// First eight bytes of the SHA-256 of `text`, as a seed component.
pub fn key_hash(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Hex SHA-256 of the canonical JSON form of a LION config.
pub fn lion_cache_key(config: &LionConfig) -> String {
    let json = serde_json::to_string(config).expect("LION config serializes");
    Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Loads trained artifacts from `cache_dir` or trains and stores them.
pub fn load_or_train(config: &LionConfig, cache_dir: Option<&Path>) -> Result<LionArtifacts, HarnessError> {
    let Some(dir) = cache_dir else {
        return Ok(train_lion(config)?);
    };
    let path = dir.join(format!("{}.ckpt", lion_cache_key(config)));
    if path.exists() {
        let cached = checkpoint::load_file(&path)?;
        if &cached.config == config {
            return Ok(cached);
        }
    }
    let artifacts = train_lion(config)?;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let partial = path.with_extension("ckpt.partial");
    checkpoint::save_file(&artifacts, &partial)?;
    std::fs::rename(&partial, &path).map_err(|e| HarnessError::io(&path, e))?;
    Ok(artifacts)
}

/// `λ`, mean return and, for trained policies, proximity on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub lambda: Vec<f64>,
    pub mean_return: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proximity: Option<Vec<f64>>,
}

impl SweepCurve {
    /// Attaches proximity values from the landscape to an oracle profile.
    pub fn from_oracle(landscape: &dyn Landscape, oracle: &OracleProfile) -> Self {
        let proximity: Option<Vec<f64>> = oracle.grid.iter().map(|&l| landscape.proximity(l)).collect();
        Self {
            lambda: oracle.grid.iter().map(|l| l.value()).collect(),
            mean_return: oracle.mean_returns.clone(),
            proximity,
        }
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

/// Evaluates `landscape` on `resolution` evenly spaced λ values.
pub fn sweep(
    landscape: &dyn Landscape,
    resolution: usize,
    episodes: usize,
    rng: &mut Stream,
) -> Result<SweepCurve, LandscapeError> {
    let oracle = oracle_grid(landscape, resolution, episodes, rng)?;
    Ok(SweepCurve::from_oracle(landscape, &oracle))
}

/// A ready-to-search landscape with its oracle and metric references.
#[derive(Clone, Debug)]
pub struct BuiltLandscape {
    pub entry: LandscapeEntry,
    pub landscape: Arc<dyn Landscape>,
    pub oracle: OracleProfile,
    pub references: References,
    pub sweep: SweepCurve,
}

impl BuiltLandscape {
    pub fn id(&self) -> &str {
        self.entry.id()
    }
}

/// References from the analytic mean when the landscape has one, otherwise
/// from the averaged oracle grid.
pub fn references(landscape: &dyn Landscape, oracle: &OracleProfile) -> References {
    let exact: Option<Vec<f64>> = oracle.grid.iter().map(|&l| landscape.expected_return(l)).collect();
    match exact {
        Some(means) => References {
            r_behavioral: means[0],
            r_star: means.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        },
        None => References {
            r_behavioral: oracle.behavioral_return(),
            r_star: oracle.best_return,
        },
    }
}

/// The landscape object of one suite entry, training (or loading) LION
/// policies as needed.
pub fn instantiate(entry: &LandscapeEntry, config: &ExperimentConfig) -> Result<Arc<dyn Landscape>, HarnessError> {
    Ok(match entry {
        LandscapeEntry::Synthetic { .. } => {
            let spec = entry.spec().expect("synthetic entries carry a spec");
            Arc::new(make_synthetic(spec, derive_seed(config.seed, &[key_hash(entry.id())]))?)
        }
        LandscapeEntry::Lion { lion, .. } => Arc::new(load_or_train(lion, config.cache_dir.as_deref())?.landscape()),
    })
}

/// Stream for the oracle grid and sweeps of landscape `id`.
pub fn oracle_stream(config: &ExperimentConfig, id: &str) -> Stream {
    Stream::derived(config.seed, &[tags::ORACLE, key_hash(id)])
}

/// Instantiates one suite entry and computes its oracle and sweep.
pub fn build_landscape(entry: &LandscapeEntry, config: &ExperimentConfig) -> Result<BuiltLandscape, HarnessError> {
    let landscape = instantiate(entry, config)?;
    let mut rng = oracle_stream(config, entry.id());
    let oracle = oracle_grid(
        landscape.as_ref(),
        config.oracle.resolution,
        config.oracle.episodes_per_point,
        &mut rng,
    )?;
    let references = references(landscape.as_ref(), &oracle);
    let sweep = SweepCurve::from_oracle(landscape.as_ref(), &oracle);
    Ok(BuiltLandscape {
        entry: entry.clone(),
        landscape,
        oracle,
        references,
        sweep,
    })
}

/// Proximity of a landscape at λ = 0 and λ = 1, when it reports one.
pub fn proximity_endpoints(landscape: &dyn Landscape) -> Option<(f64, f64)> {
    let zero = landscape.proximity(TradeOff::new(0.0).expect("0 is a valid trade-off"))?;
    let one = landscape.proximity(TradeOff::new(1.0).expect("1 is a valid trade-off"))?;
    Some((zero, one))
}
