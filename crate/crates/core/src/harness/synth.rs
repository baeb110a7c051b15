//! Synthetic stand-in for a camera dataset.
//!
//! Every class has a fixed prototype. An *instance* is the prototype plus a
//! latent offset drawn once; an observation of the instance adds isotropic
//! Gaussian noise. Sequences observe one instance over several frames with
//! a noise level that decays linearly from `sigma_start` to `sigma_end`, so
//! early frames are the hardest and frames are correlated through the
//! shared instance. IID examples observe a fresh instance at `sigma_end`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Label, LabeledExample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub dim: usize,
    /// Euclidean distance between any two class prototypes (exact when
    /// `classes <= dim`).
    pub separation: f64,
    /// Standard deviation of the per-instance latent offset.
    pub instance_spread: f64,
    /// Observation noise at the first frame.
    pub sigma_start: f64,
    /// Observation noise at the last frame and for IID examples.
    pub sigma_end: f64,
    pub frames: usize,
    pub train: usize,
    pub calibration: usize,
    pub validation: usize,
    pub iid_test: usize,
    pub sequences: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            classes: 10,
            dim: 16,
            separation: 4.5,
            instance_spread: 0.5,
            sigma_start: 2.0,
            sigma_end: 0.5,
            frames: 30,
            train: 2000,
            calibration: 500,
            validation: 500,
            iid_test: 1000,
            sequences: 100,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("classes", self.classes),
            ("dim", self.dim),
            ("frames", self.frames),
            ("train", self.train),
            ("calibration", self.calibration),
            ("validation", self.validation),
            ("iid_test", self.iid_test),
            ("sequences", self.sequences),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be positive")));
        }
        let scales = [
            self.separation,
            self.instance_spread,
            self.sigma_start,
            self.sigma_end,
        ];
        if scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidConfig(
                "separation and noise scales must be finite and non-negative".into(),
            ));
        }
        if self.sigma_start < self.sigma_end {
            return Err(Error::InvalidConfig(
                "noise schedule must be non-increasing (sigma_start >= sigma_end)".into(),
            ));
        }
        Ok(())
    }

    /// Noise level at zero-based frame `t`.
    pub fn sigma(&self, t: usize) -> f64 {
        if self.frames <= 1 {
            return self.sigma_end;
        }
        let frac = t.min(self.frames - 1) as f64 / (self.frames - 1) as f64;
        self.sigma_start * (1.0 - frac) + self.sigma_end * frac
    }
}

/// One observed track: ordered frames sharing a ground-truth label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    pub label: Label,
    pub frames: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SequenceDataset {
    pub sequences: Vec<Sequence>,
}

impl SequenceDataset {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// All splits produced by [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub prototypes: Vec<Vec<f64>>,
    pub train: Vec<LabeledExample>,
    pub calibration: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub iid_test: Vec<LabeledExample>,
    pub sequences: SequenceDataset,
}

struct Sampler<'a> {
    config: &'a SyntheticConfig,
    prototypes: &'a [Vec<f64>],
    rng: ChaCha8Rng,
}

impl Sampler<'_> {
    fn gaussian(&mut self, center: &[f64], sigma: f64) -> Vec<f64> {
        center
            .iter()
            .map(|c| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                c + sigma * z
            })
            .collect()
    }

    fn instance(&mut self) -> (Label, Vec<f64>) {
        let label = self.rng.random_range(0..self.config.classes);
        let latent = self.gaussian(&self.prototypes[label], self.config.instance_spread);
        (label, latent)
    }

    fn iid_split(&mut self, n: usize) -> Vec<LabeledExample> {
        (0..n)
            .map(|_| {
                let (label, latent) = self.instance();
                LabeledExample::new(self.gaussian(&latent, self.config.sigma_end), label)
            })
            .collect()
    }

    fn sequence(&mut self) -> Sequence {
        let (label, latent) = self.instance();
        let frames = (0..self.config.frames)
            .map(|t| self.gaussian(&latent, self.config.sigma(t)))
            .collect();
        Sequence { label, frames }
    }
}

fn prototypes(config: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let radius = config.separation / std::f64::consts::SQRT_2;
    (0..config.classes)
        .map(|c| {
            if config.classes <= config.dim {
                let mut p = vec![0.0; config.dim];
                p[c] = radius;
                p
            } else {
                let raw: Vec<f64> = (0..config.dim).map(|_| StandardNormal.sample(&mut *rng)).collect();
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                raw.into_iter().map(|x| radius * x / norm).collect()
            }
        })
        .collect()
}

/// Draws every split from the configured seed.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let prototypes = prototypes(config, &mut rng);
    let mut sampler = Sampler {
        config,
        prototypes: &prototypes,
        rng,
    };
    let train = sampler.iid_split(config.train);
    let calibration = sampler.iid_split(config.calibration);
    let validation = sampler.iid_split(config.validation);
    let iid_test = sampler.iid_split(config.iid_test);
    let sequences = SequenceDataset {
        sequences: (0..config.sequences).map(|_| sampler.sequence()).collect(),
    };
    Ok(SyntheticData {
        prototypes,
        train,
        calibration,
        validation,
        iid_test,
        sequences,
    })
}
