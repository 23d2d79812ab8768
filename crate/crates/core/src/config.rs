//! Run configuration, read from a TOML file. Every field has a default, so
//! an empty file (or no file) is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_reduce::ReductionConfig;
use crate::proxy_eval::{ProxyConfig, ProxyWeights, PROXY_JUMP_MEAN};
use crate::ranking::{simplex_grid, WeightVector};
use crate::track_bench::{StrategyParams, TrackLayout};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Simplex lattice spacing; `1/step` must be an integer.
    pub step: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { step: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub labels_csv: Option<PathBuf>,
    pub field_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub layout: TrackLayout,
    pub strategy: StrategyParams,
    pub proxy: ProxyConfig,
    /// Coefficients of the scalar proxy score used for screening.
    pub proxy_weights: ProxyWeights,
    pub reduction: ReductionConfig,
    pub weights: WeightVector,
    pub sweep: SweepConfig,
    /// Not echoed into reports: output must not depend on where files live.
    #[serde(skip_serializing)]
    pub paths: PathsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            layout: TrackLayout::default(),
            strategy: StrategyParams::default(),
            proxy: ProxyConfig::default(),
            proxy_weights: ProxyWeights::single(PROXY_JUMP_MEAN, 1.0),
            reduction: ReductionConfig::default(),
            weights: WeightVector::default(),
            sweep: SweepConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        self.proxy.validate()?;
        self.proxy_weights.validate()?;
        self.reduction.validate()?;
        self.weights.validate()?;
        simplex_grid(self.sweep.step)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(
            PipelineConfig::from_toml_str("").unwrap(),
            PipelineConfig::default()
        );
    }

    #[test]
    fn shipped_default_config_matches() {
        let text = include_str!("../config/default.toml");
        assert_eq!(
            PipelineConfig::from_toml_str(text).unwrap(),
            PipelineConfig::default()
        );
    }

    #[test]
    fn partial_override() {
        let cfg = PipelineConfig::from_toml_str(
            "[layout]\ntrack_count = 8\n[weights]\nbeta_sigma = 1.0\nbeta_u = 0.0\nbeta_p = 0.0\n",
        )
        .unwrap();
        assert_eq!(cfg.layout.track_count, 8);
        assert_eq!(cfg.layout.pitch, 1.0);
        assert_eq!(cfg.weights.as_array(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "[layout]\ntrack_count = 1\n",
            "[weights]\nbeta_sigma = 0.9\nbeta_u = 0.9\nbeta_p = 0.0\n",
            "[sweep]\nstep = 0.3\n",
            "[reduction]\ntop_k = 0\n",
            "[layout]\ntracks = 3\n",
            "[proxy_weights]\nnot_a_metric = 1.0\n",
        ] {
            let err = PipelineConfig::from_toml_str(text).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{text}: {err}");
        }
    }
}
