//! Subcarrier selection, fixed-window sample segmentation, per-subcarrier
//! normalization and wavelet denoising.

mod normalize;
mod segment;
mod select;
mod wavelet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use normalize::normalize_sample;
pub use segment::{interpolate_rows, resample_rows, segment, SegmentAction};
pub use select::{burr_noise_exclusions, high_frequency_fraction, select_subcarriers};
pub use wavelet::{denoise_sample, dwt, idwt, wavelet_denoise, wavelet_denoise_with_threshold, universal_threshold, DB4_LOWPASS};

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("frame width {found} does not match layout total of {expected} subcarriers")]
    LayoutMismatch { expected: usize, found: usize },
    #[error("empty CSI sequence")]
    EmptySequence,
    #[error("need at least 2 rows to interpolate, got {0}")]
    TooFewRows(usize),
    #[error("invalid target row count {target} for {rows} input rows")]
    InvalidTarget { rows: usize, target: usize },
    #[error("timestamps must be strictly increasing")]
    NonIncreasingTimestamps,
    #[error("series of length {len} too short for {levels} decomposition levels")]
    SeriesTooShort { len: usize, levels: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Csi(#[from] crate::model::CsiError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    pub window_seconds: f64,
    pub n_norm: usize,
    pub discard_threshold_fraction: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self { window_seconds: 2.0, n_norm: 200, discard_threshold_fraction: 0.5 }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.n_norm < 2 {
            return Err(PreprocessError::InvalidConfig("n_norm must be >= 2".into()));
        }
        if !(self.discard_threshold_fraction > 0.0 && self.discard_threshold_fraction < 1.0) {
            return Err(PreprocessError::InvalidConfig("discard_threshold_fraction must lie in (0, 1)".into()));
        }
        if !(self.window_seconds > 0.0 && self.window_seconds.is_finite()) {
            return Err(PreprocessError::InvalidConfig("window_seconds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveletFamily {
    /// 8-tap Daubechies with four vanishing moments.
    Daubechies4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdRule {
    /// Soft thresholding at `sigma * sqrt(2 ln n)`, `sigma = median(|d1|) / 0.6745`.
    SoftUniversal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveletConfig {
    pub family: WaveletFamily,
    pub levels: usize,
    pub threshold_rule: ThresholdRule,
    pub enabled: bool,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self { family: WaveletFamily::Daubechies4, levels: 3, threshold_rule: ThresholdRule::SoftUniversal, enabled: false }
    }
}
