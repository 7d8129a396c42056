use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::ShiftFamily;
use crate::error::{Error, Result};
use crate::objectives::{LossSpec, RewardSpec};
use crate::probe::ProbeSettings;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// 8×8 synthetic digit-like glyphs.
    Glyphs,
    /// Gaussian blobs (not images: rotation and blur do not apply).
    Blobs,
    /// IDX files given by `mnist_images` / `mnist_labels`.
    Mnist,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub num_classes: usize,
    pub per_class: usize,
    /// Glyph jitter in pixels.
    pub max_shift: usize,
    pub pixel_noise: f64,
    /// Standard deviation of the regression target around the class index.
    pub label_noise: f64,
    pub blob_dim: usize,
    pub blob_separation: f64,
    pub mnist_images: Option<PathBuf>,
    pub mnist_labels: Option<PathBuf>,
    /// Keep only the first `mnist_limit` IDX samples.
    pub mnist_limit: Option<usize>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            kind: DatasetKind::Glyphs,
            num_classes: 10,
            per_class: 200,
            max_shift: 0,
            pixel_noise: 0.1,
            label_noise: 0.5,
            blob_dim: 64,
            blob_separation: 4.0,
            mnist_images: None,
            mnist_labels: None,
            mnist_limit: Some(10_000),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    GaussianNll,
    MseReward,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub lr: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub weight_decay: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self { lr: 0.05, batch_size: 64, steps: 3000, weight_decay: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftSweep {
    pub family: ShiftFamily,
    pub levels: Vec<f64>,
}

impl Default for ShiftSweep {
    fn default() -> Self {
        Self {
            family: ShiftFamily::Rotation,
            levels: vec![0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OodSettings {
    pub steps: usize,
    pub lr: f64,
    pub holdout_frac: f64,
}

impl Default for OodSettings {
    fn default() -> Self {
        let d = crate::shiftmeter::OodConfig::default();
        Self { steps: d.steps, lr: d.lr, holdout_frac: d.holdout_frac }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub projection_layer: Option<usize>,
    pub subspace_rank: Option<usize>,
    pub constants_layer: Option<usize>,
}

impl ProbeConfig {
    pub fn settings(&self) -> ProbeSettings {
        ProbeSettings {
            projection_layer: self.projection_layer,
            subspace_rank: self.subspace_rank,
            constants_layer: self.constants_layer,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub correct: f64,
    pub incorrect: f64,
    pub abstain: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { correct: 1.0, incorrect: -4.0, abstain: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSweepConfig {
    pub depths: Vec<usize>,
    pub width: usize,
    pub lr: f64,
    pub steps: usize,
    pub init_scale: f64,
    pub checkpoints: usize,
    /// Separable data, shared by every seed and depth.
    pub num_points: usize,
    pub dim: usize,
    pub gap: f64,
    pub data_seed: u64,
    /// Depth and per-class size of the final-bias run.
    pub bias_depth: usize,
    pub bias_per_class: usize,
}

impl Default for FlowSweepConfig {
    fn default() -> Self {
        Self {
            depths: vec![3, 6],
            width: 16,
            lr: 1e-2,
            steps: 60_000,
            init_scale: 0.5,
            checkpoints: 30,
            num_points: 20,
            dim: 5,
            gap: 0.3,
            data_seed: 7,
            bias_depth: 3,
            bias_per_class: 20,
        }
    }
}

/// Everything a sweep needs. Serialized as TOML; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub loss: LossKind,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Fraction of the data held out for evaluation.
    pub holdout_frac: f64,
    pub out: Option<PathBuf>,
    pub dataset: DatasetConfig,
    pub train: TrainSettings,
    pub shift: ShiftSweep,
    pub ood: OodSettings,
    pub probe: ProbeConfig,
    pub policy: PolicyConfig,
    pub flow: FlowSweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::CrossEntropy,
            hidden: vec![128, 128],
            seeds: vec![0, 1, 2, 3, 4],
            holdout_frac: 0.2,
            out: None,
            dataset: DatasetConfig::default(),
            train: TrainSettings::default(),
            shift: ShiftSweep::default(),
            ood: OodSettings::default(),
            probe: ProbeConfig::default(),
            policy: PolicyConfig::default(),
            flow: FlowSweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Rotation sweep with a cross-entropy classifier.
    pub fn reversion() -> Self {
        Self::default()
    }

    /// Gaussian-noise sweep of the default classifier.
    pub fn reversion_noise() -> Self {
        Self {
            shift: ShiftSweep {
                family: ShiftFamily::GaussNoise,
                levels: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            },
            ..Self::default()
        }
    }

    /// Blur sweep with a Gaussian-NLL regressor.
    pub fn reversion_gaussian() -> Self {
        Self {
            loss: LossKind::GaussianNll,
            train: TrainSettings { lr: 0.01, ..TrainSettings::default() },
            shift: ShiftSweep {
                family: ShiftFamily::GaussBlur,
                levels: vec![0.0, 0.5, 0.75, 1.0, 1.5, 2.0],
            },
            ..Self::default()
        }
    }

    /// Noise sweep for the three decision policies.
    pub fn decision() -> Self {
        Self {
            train: TrainSettings { lr: 0.01, ..TrainSettings::default() },
            shift: ShiftSweep {
                family: ShiftFamily::GaussNoise,
                levels: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            },
            ..Self::default()
        }
    }

    /// FGSM on overlapping blobs, where clean predictions are not saturated.
    pub fn negative_fgsm() -> Self {
        Self {
            dataset: DatasetConfig { kind: DatasetKind::Blobs, ..DatasetConfig::default() },
            shift: ShiftSweep { family: ShiftFamily::Fgsm, levels: vec![0.0, 1.0, 2.0, 3.0] },
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        Self::from_toml_str(&text).map_err(|e| e.context(format!("config {}", p.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty");
        }
        if self.shift.levels.is_empty() {
            return bad("shift levels must be nonempty");
        }
        if self.shift.levels.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("shift levels must be strictly increasing");
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden widths must be positive");
        }
        if !(self.holdout_frac > 0.0 && self.holdout_frac < 1.0) {
            return bad("holdout_frac must lie in (0, 1)");
        }
        if self.train.batch_size == 0 || !(self.train.lr > 0.0) {
            return bad("train.batch_size and train.lr must be positive");
        }
        if self.dataset.num_classes < 2 {
            return bad("dataset.num_classes must be at least 2");
        }
        if self.dataset.kind == DatasetKind::Mnist
            && (self.dataset.mnist_images.is_none() || self.dataset.mnist_labels.is_none())
        {
            return bad("the mnist dataset needs mnist_images and mnist_labels");
        }
        if self.flow.depths.iter().any(|&d| d < 2) {
            return bad("flow depths must be at least 2");
        }
        self.reward_spec().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn reward_spec(&self) -> Result<RewardSpec> {
        let p = self.policy;
        RewardSpec::new(self.dataset.num_classes, p.correct, p.incorrect, p.abstain)
    }

    /// The loss for `kind` on this config's class count.
    pub fn loss_spec(&self, kind: LossKind, num_classes: usize) -> Result<LossSpec> {
        Ok(match kind {
            LossKind::CrossEntropy => LossSpec::cross_entropy(num_classes)?,
            LossKind::GaussianNll => LossSpec::GaussianNll,
            LossKind::MseReward => {
                let p = self.policy;
                LossSpec::MseReward(RewardSpec::new(num_classes, p.correct, p.incorrect, p.abstain)?)
            }
        })
    }

    /// Replaces the seed list and points the dataset at IDX files when given.
    pub fn with_overrides(mut self, seed: Option<u64>, mnist: Option<(PathBuf, PathBuf)>) -> Result<Self> {
        if let Some(s) = seed {
            self.seeds = vec![s];
        }
        if let Some((images, labels)) = mnist {
            self.dataset.kind = DatasetKind::Mnist;
            self.dataset.mnist_images = Some(images);
            self.dataset.mnist_labels = Some(labels);
        }
        self.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        for cfg in [
            ExperimentConfig::reversion(),
            ExperimentConfig::reversion_noise(),
            ExperimentConfig::reversion_gaussian(),
            ExperimentConfig::decision(),
            ExperimentConfig::negative_fgsm(),
        ] {
            let text = cfg.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str("seeds = [3]\n[shift]\nfamily = \"gauss_noise\"\nlevels = [0.0, 0.5]\n").unwrap();
        assert_eq!(cfg.seeds, vec![3]);
        assert_eq!(cfg.shift.family, ShiftFamily::GaussNoise);
        assert_eq!(cfg.hidden, vec![128, 128]);
    }

    #[test]
    fn invalid_configs() {
        for text in [
            "seeds = []",
            "[shift]\nlevels = [0.0, 10.0, 5.0]",
            "[shift]\nlevels = [1.0, 1.0]",
            "unknown_key = 1",
            "[policy]\ncorrect = -5.0",
            "[dataset]\nkind = \"mnist\"",
        ] {
            assert!(matches!(ExperimentConfig::from_toml_str(text), Err(Error::Config(_))), "{text}");
        }
    }
}
