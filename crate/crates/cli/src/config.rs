//! JSON run configuration. Command-line flags override file values.

use std::path::{Path, PathBuf};

use hybridloc_core::{Error, FilterConfig, FilterGain, FusionMode, KinematicState, Result, ScenarioSpec};
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub anchors: PathBuf,
    pub imu: PathBuf,
    pub uwb: PathBuf,
    /// Empty or absent disables evaluation.
    #[serde(default)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Scenario fields; missing keys fall back to the replication defaults.
    #[serde(default)]
    pub scenario: Option<Value>,
    #[serde(default)]
    pub dataset: Option<DatasetPaths>,
    #[serde(default)]
    pub filter: Option<FilterConfig>,
    #[serde(default)]
    pub gain: Option<FilterGain>,
    #[serde(default)]
    pub modes: Option<Vec<FusionMode>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub epoch_tolerance: Option<f64>,
    #[serde(default)]
    pub initial_state: Option<KinematicState>,
    #[serde(default)]
    pub runs: Option<usize>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub const DEFAULT_EPOCH_TOLERANCE: f64 = 0.1;

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        // Dataset paths are relative to the config file.
        if let (Some(ds), Some(dir)) = (cfg.dataset.as_mut(), path.parent()) {
            for p in [&mut ds.anchors, &mut ds.imu, &mut ds.uwb] {
                *p = dir.join(&*p);
            }
            if let Some(t) = ds.truth.as_mut().filter(|t| !t.as_os_str().is_empty()) {
                *t = dir.join(&*t);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario.is_some() && self.dataset.is_some() {
            return Err(Error::Config(
                "give either a scenario or dataset paths, not both".into(),
            ));
        }
        if let Some(tol) = self.epoch_tolerance {
            if !(tol >= 0.0 && tol.is_finite()) {
                return Err(Error::Config(format!(
                    "epoch_tolerance must be non-negative, got {tol}"
                )));
            }
        }
        if let Some(f) = &self.filter {
            f.validate()?;
        }
        if let Some(g) = &self.gain {
            FilterGain::new(g.kx, g.ky)?;
        }
        Ok(())
    }

    pub fn epoch_tolerance(&self) -> f64 {
        self.epoch_tolerance.unwrap_or(DEFAULT_EPOCH_TOLERANCE)
    }

    /// The configured scenario merged over the replication defaults, with
    /// the seed override applied.
    pub fn scenario(&self) -> Result<ScenarioSpec> {
        let base = ScenarioSpec::replication();
        let mut spec = match &self.scenario {
            None => base,
            Some(Value::Object(over)) => {
                let mut merged = serde_json::to_value(&base).map_err(|e| Error::Config(e.to_string()))?;
                if let Value::Object(m) = &mut merged {
                    m.extend(over.clone());
                }
                serde_json::from_value(merged).map_err(|e| Error::Config(format!("scenario: {e}")))?
            }
            Some(_) => return Err(Error::Config("scenario must be a JSON object".into())),
        };
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
