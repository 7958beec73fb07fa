//! Merged pipeline configuration, loaded from one TOML file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use csi2dig_core::autoencoder::AeConfig;
use csi2dig_core::neural::TrainConfig;
use csi2dig_core::preprocess::{SegmentationConfig, WaveletConfig};
use csi2dig_core::synth::SynthSpec;
use csi2dig_core::tsnet::TsNetConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Copied into every sub-configuration's seed; `--seed` overrides it.
    pub seed: u64,
    pub segmentation: SegmentationConfig,
    pub wavelet: WaveletConfig,
    pub autoencoder: AeConfig,
    pub tsnet: TsNetConfig,
    /// Optimizer settings for the classifier.
    pub train: TrainConfig,
    /// Optimizer settings for the autoencoder.
    pub ae_train: TrainConfig,
    pub synth: SynthSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            segmentation: SegmentationConfig::default(),
            wavelet: WaveletConfig::default(),
            autoencoder: AeConfig::default(),
            tsnet: TsNetConfig::default(),
            train: TrainConfig::default(),
            ae_train: TrainConfig { epochs: 50, ..TrainConfig::default() },
            synth: SynthSpec::default(),
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies one seed everywhere so a single number governs all randomness.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        let seed = seed.unwrap_or(self.seed);
        self.seed = seed;
        self.train.seed = seed;
        self.ae_train.seed = seed;
        self.synth.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: &dyn std::fmt::Display| CliError::Usage(e.to_string());
        self.segmentation.validate().map_err(|e| usage(&e))?;
        self.autoencoder.validate().map_err(|e| usage(&e))?;
        self.tsnet.validate().map_err(|e| usage(&e))?;
        self.train.validate().map_err(|e| usage(&e))?;
        self.ae_train.validate().map_err(|e| usage(&e))?;
        self.synth.validate().map_err(|e| usage(&e))?;
        Ok(())
    }
}
