use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use tricp_core::embedding::TrainingConfig;
use tricp_core::harness::SyntheticConfig;
use tricp_core::icp::DEFAULT_NEIGHBORS;

/// File locations; relative paths resolve against the output directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub train: PathBuf,
    pub calibration: PathBuf,
    pub validation: PathBuf,
    pub iid_test: PathBuf,
    pub sequences: PathBuf,
    pub model: PathBuf,
    pub calibration_artifact: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            train: "train.csv".into(),
            calibration: "calibration.csv".into(),
            validation: "validation.csv".into(),
            iid_test: "iid_test.csv".into(),
            sequences: "sequences.csv".into(),
            model: "model.json".into(),
            calibration_artifact: "calibration.json".into(),
        }
    }
}

/// Experiment manifest. The run seed overrides the seeds in the
/// `training` and `synthetic` sections.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Neighbor count of the k-NN nonconformity measure.
    pub neighbors: usize,
    /// Significance for predict/simulate; falls back to the calibrated one.
    pub epsilon: Option<f64>,
    pub k_consecutive: usize,
    pub epsilons: Vec<f64>,
    pub k_list: Vec<usize>,
    pub paths: Paths,
    pub training: TrainingConfig,
    pub synthetic: SyntheticConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: "run".into(),
            neighbors: DEFAULT_NEIGHBORS,
            epsilon: None,
            k_consecutive: 3,
            epsilons: vec![0.005, 0.01, 0.02, 0.05, 0.1, 0.2],
            k_list: vec![1, 2, 3, 5, 8],
            paths: Paths::default(),
            training: TrainingConfig::default(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub k_consecutive: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: Overrides) -> Result<Self> {
        let mut config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(dir) = overrides.out_dir {
            config.out_dir = dir;
        }
        if overrides.epsilon.is_some() {
            config.epsilon = overrides.epsilon;
        }
        if let Some(k) = overrides.k_consecutive {
            config.k_consecutive = k;
        }
        config.training.seed = config.seed;
        config.synthetic.seed = config.seed;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if let Some(eps) = self.epsilon {
            if !(0.0..=1.0).contains(&eps) {
                bail!("epsilon {eps} outside [0, 1]");
            }
        }
        if let Some(eps) = self.epsilons.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            bail!("epsilon grid value {eps} outside [0, 1]");
        }
        if self.k_consecutive == 0 || self.k_list.contains(&0) {
            bail!("k_consecutive values must be at least 1");
        }
        if self.neighbors == 0 {
            bail!("neighbors must be at least 1");
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_owned()
        } else {
            self.out_dir.join(path)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "seed = 3\nepsilon = 0.1\n[training]\nepochs = 2\n[synthetic]\nclasses = 3\n",
        )
        .unwrap();
        let config = RunConfig::load(
            Some(&path),
            Overrides {
                seed: Some(9),
                epsilon: Some(0.2),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.training.seed, 9);
        assert_eq!(config.synthetic.seed, 9);
        assert_eq!(config.epsilon, Some(0.2));
        assert_eq!(config.training.epochs, 2);
        assert_eq!(config.synthetic.classes, 3);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "sede = 3\n").unwrap();
        assert!(RunConfig::load(Some(&path), Overrides::default()).is_err());
        std::fs::write(&path, "epsilons = [0.1, 1.5]\n").unwrap();
        assert!(RunConfig::load(Some(&path), Overrides::default()).is_err());
        let missing = dir.path().join("missing.toml");
        let err = RunConfig::load(Some(&missing), Overrides::default()).unwrap_err();
        assert!(format!("{err:#}").contains("missing.toml"));
    }
}
