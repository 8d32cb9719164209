use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalbench::{default_data_dir, Dataset, ExperimentConfig};
use crate::graph::DatasetFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Known dataset name or a file path.
    pub name: String,
    pub format: Option<DatasetFormat>,
    pub data_dir: Option<PathBuf>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig { name: "bitcoin-alpha".into(), format: None, data_dir: None }
    }
}

impl DatasetConfig {
    pub fn open(&self) -> Result<Dataset> {
        let dir = self.data_dir.clone().unwrap_or_else(default_data_dir);
        Dataset::open(&self.name, self.format, &dir)
    }
}

/// Everything a run needs. Loaded from TOML, or from the JSON that every
/// run writes as `config.resolved.json`.
///
/// ```toml
/// output_dir = "runs/alpha-sga"
///
/// [dataset]
/// name = "bitcoin-alpha"
///
/// [experiment]
/// pipeline = "sga"
/// seeds = [0, 1, 2, 3, 4]
///
/// [experiment.encoder]
/// epochs = 300
///
/// [experiment.augment]
/// eps_del_pos = 0.2
///
/// [experiment.curriculum]
/// lambda0 = 0.25
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub output_dir: PathBuf,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetConfig::default(),
            output_dir: PathBuf::from("runs/latest"),
            experiment: ExperimentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        let cfg: RunConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.name.is_empty() {
            return Err(Error::Config("dataset name is empty".into()));
        }
        self.experiment.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalbench::Pipeline;

    #[test]
    fn toml_with_defaults() {
        let cfg: RunConfig = toml::from_str(
            r#"
            output_dir = "out"
            [dataset]
            name = "bitcoin-otc"
            [experiment]
            pipeline = "random:flip-sign,0.1"
            seeds = [3, 4]
            [experiment.encoder]
            epochs = 10
            [experiment.curriculum]
            big_t = 4
            "#,
        )
        .unwrap();
        assert_eq!(cfg.dataset.name, "bitcoin-otc");
        assert!(matches!(cfg.experiment.pipeline, Pipeline::Random { .. }));
        assert_eq!(cfg.experiment.encoder.epochs, 10);
        assert_eq!(cfg.experiment.encoder.embed_dim, 64);
        assert_eq!(cfg.experiment.curriculum.big_t, Some(4));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("[experiment]\nlamda0 = 0.3\n").is_err());
    }

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
