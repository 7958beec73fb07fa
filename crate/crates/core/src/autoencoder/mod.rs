//! Weight-shared two-branch autoencoder trained with a reconstruction term
//! plus a correlation-based contrastive term on the decoder outputs.

mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CheckpointKind, CsiError, Matrix, ModelCheckpoint, Sample};
use crate::neural::{relu_backward, relu_forward, Linear, NeuralError, ParamSet, Scalar};

pub use train::{output_correlation_stats, train_autoencoder, AeEpochRecord, AeOutcome, CorrelationStats};

#[derive(Debug, Error, PartialEq)]
pub enum AeError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need at least two classes and one class with two samples to form pairs")]
    InsufficientPairs,
    #[error("sample {0} has no label")]
    UnlabeledSample(usize),
    #[error("checkpoint holds a {0:?} model, expected Autoencoder")]
    WrongCheckpointKind(CheckpointKind),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Csi(#[from] CsiError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossVariant {
    /// `y * corr^2 + (1 - y) * max(xi - corr, 0)^2`, exactly as commonly printed.
    PaperLiteral,
    /// `y * (1 - corr)^2 + (1 - y) * max(corr - xi, 0)^2`: same-class pairs are
    /// pulled toward correlation 1, different-class pairs pushed below `xi`.
    CorrectedDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairStrategy {
    /// Half same-class and half different-class pairs in every epoch.
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeConfig {
    pub layer_widths_encoder: [usize; 3],
    pub xi: f64,
    pub loss_variant: LossVariant,
    pub recon_weight: f64,
    pub contrastive_weight: f64,
    pub pair_strategy: PairStrategy,
    /// Pairs drawn per epoch; when unset, half the dataset size (rounded up),
    /// so every sample is seen about once per epoch.
    pub pairs_per_epoch: Option<usize>,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self {
            layer_widths_encoder: [512, 256, 128],
            xi: 0.85,
            loss_variant: LossVariant::CorrectedDistance,
            recon_weight: 1.0,
            contrastive_weight: 1.0,
            pair_strategy: PairStrategy::Balanced,
            pairs_per_epoch: None,
        }
    }
}

impl AeConfig {
    pub fn validate(&self) -> Result<(), AeError> {
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(AeError::InvalidConfig(format!("xi must lie in (0, 1), got {}", self.xi)));
        }
        if self.layer_widths_encoder.contains(&0) {
            return Err(AeError::InvalidConfig("encoder widths must be positive".into()));
        }
        if self.recon_weight < 0.0 || self.contrastive_weight < 0.0 {
            return Err(AeError::InvalidConfig("loss weights must be non-negative".into()));
        }
        if self.pairs_per_epoch == Some(0) {
            return Err(AeError::InvalidConfig("pairs_per_epoch must be positive".into()));
        }
        Ok(())
    }
}

/// Pearson correlation of two equal-length vectors plus its gradient with
/// respect to each; `None` if either vector is constant.
pub fn correlation_with_grad<T: Scalar>(a: &[T], b: &[T]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    let n = a.len() as f64;
    let ma = a.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let mb = b.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let ca: Vec<f64> = a.iter().map(|v| v.as_f64() - ma).collect();
    let cb: Vec<f64> = b.iter().map(|v| v.as_f64() - mb).collect();
    let saa: f64 = ca.iter().map(|v| v * v).sum();
    let sbb: f64 = cb.iter().map(|v| v * v).sum();
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    let sab: f64 = ca.iter().zip(&cb).map(|(x, y)| x * y).sum();
    let (na, nb) = (saa.sqrt(), sbb.sqrt());
    let c = sab / (na * nb);
    let ga = ca.iter().zip(&cb).map(|(x, y)| y / (na * nb) - c * x / saa).collect();
    let gb = ca.iter().zip(&cb).map(|(x, y)| x / (na * nb) - c * y / sbb).collect();
    Some((c, ga, gb))
}

/// One unaveraged pair term of the contrastive objective and its derivative
/// with respect to the correlation.
pub fn pair_term(corr: f64, same: bool, xi: f64, variant: LossVariant) -> (f64, f64) {
    match (variant, same) {
        (LossVariant::CorrectedDistance, true) => ((1.0 - corr).powi(2), -2.0 * (1.0 - corr)),
        (LossVariant::CorrectedDistance, false) => {
            let m = (corr - xi).max(0.0);
            (m * m, 2.0 * m)
        }
        (LossVariant::PaperLiteral, true) => (corr * corr, 2.0 * corr),
        (LossVariant::PaperLiteral, false) => {
            let m = (xi - corr).max(0.0);
            (m * m, -2.0 * m)
        }
    }
}

/// Contrastive loss of a single pair of reconstructions (the `1/(2N)` prefactor
/// with `N = 1`). Constant vectors contribute 0.
pub fn contrastive_loss(r1: &[f64], r2: &[f64], same: bool, xi: f64, variant: LossVariant) -> Result<f64, AeError> {
    if r1.len() != r2.len() {
        return Err(AeError::ShapeMismatch(format!("reconstructions of length {} and {}", r1.len(), r2.len())));
    }
    Ok(correlation_with_grad(r1, r2).map(|(c, _, _)| pair_term(c, same, xi, variant).0 / 2.0).unwrap_or(0.0))
}

#[derive(Debug, Clone)]
pub struct Autoencoder<T> {
    pub config: AeConfig,
    pub n_t: usize,
    pub n_s: usize,
    pub params: ParamSet<T>,
    layers: [Linear; 6],
}

/// Activations of a stacked forward pass.
#[derive(Debug, Clone)]
pub struct AeCache<T> {
    batch: usize,
    /// Input to each layer; entry 6 is the output.
    acts: Vec<Vec<T>>,
}

impl<T> AeCache<T> {
    pub fn output(&self) -> &[T] {
        &self.acts[6]
    }
}

const LAYER_NAMES: [&str; 6] = ["enc1", "enc2", "enc3", "dec1", "dec2", "dec3"];

impl<T: Scalar> Autoencoder<T> {
    pub fn new(config: AeConfig, n_t: usize, n_s: usize, seed: u64) -> Result<Self, AeError> {
        config.validate()?;
        let d = n_t * n_s;
        if d == 0 {
            return Err(AeError::ShapeMismatch("empty sample shape".into()));
        }
        let [w1, w2, w3] = config.layer_widths_encoder;
        let dims = [d, w1, w2, w3, w2, w1, d];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamSet::new();
        let layers: [Linear; 6] = std::array::from_fn(|i| Linear::new(&mut ps, LAYER_NAMES[i], dims[i], dims[i + 1], &mut rng));
        // Uniform biases would make every initial reconstruction nearly the
        // same vector; start them at zero so outputs depend on the input.
        for l in &layers {
            ps.value_mut(l.b).fill(T::zero());
        }
        Ok(Self { config, n_t, n_s, params: ps, layers })
    }

    pub fn input_len(&self) -> usize {
        self.n_t * self.n_s
    }

    pub fn cast<U: Scalar>(&self) -> Autoencoder<U> {
        Autoencoder { config: self.config.clone(), n_t: self.n_t, n_s: self.n_s, params: self.params.cast(), layers: self.layers }
    }

    /// Runs `batch` flattened samples through encoder and decoder. ReLU after
    /// every layer except the last.
    pub fn forward(&self, x: &[T], batch: usize) -> Result<AeCache<T>, AeError> {
        if x.len() != batch * self.input_len() {
            return Err(AeError::ShapeMismatch(format!("expected {} values per sample", self.input_len())));
        }
        let mut acts = vec![x.to_vec()];
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&self.params, &acts[i], batch)?;
            acts.push(if i < 5 { relu_forward(&z) } else { z });
        }
        Ok(AeCache { batch, acts })
    }

    /// Accumulates parameter gradients for `dL/doutput`.
    pub fn backward(&mut self, cache: &AeCache<T>, dout: &[T]) {
        let mut d = dout.to_vec();
        for i in (0..6).rev() {
            if i < 5 {
                d = relu_backward(&cache.acts[i + 1], &d);
            }
            d = self.layers[i].backward(&mut self.params, &cache.acts[i], &d, cache.batch);
        }
    }

    /// Both branches share every weight, so a pair is one stacked batch.
    pub fn forward_pair(&self, a: &Sample, b: &Sample) -> Result<(Vec<T>, Vec<T>), AeError> {
        let x = self.flatten(&[a, b])?;
        let out = self.forward(&x, 2)?;
        let d = self.input_len();
        Ok((out.output()[..d].to_vec(), out.output()[d..].to_vec()))
    }

    pub fn flatten(&self, samples: &[&Sample]) -> Result<Vec<T>, AeError> {
        let mut x = Vec::with_capacity(samples.len() * self.input_len());
        for s in samples {
            if s.shape() != (self.n_t, self.n_s) {
                return Err(AeError::ShapeMismatch(format!("sample shape {:?}, autoencoder expects {:?}", s.shape(), (self.n_t, self.n_s))));
            }
            x.extend(s.values.as_slice().iter().map(|&v| T::of(v)));
        }
        Ok(x)
    }

    /// Reconstruction reshaped to the sample's shape; label and metadata kept.
    pub fn denoise(&self, sample: &Sample) -> Result<Sample, AeError> {
        let out = self.forward(&self.flatten(&[sample])?, 1)?;
        let values = Matrix::from_vec(self.n_t, self.n_s, out.output().iter().map(|v| v.as_f64()).collect());
        Ok(Sample { values, label: sample.label, meta: sample.meta.clone() })
    }

    pub fn reconstruct_all(&self, samples: &[&Sample]) -> Result<Vec<Vec<T>>, AeError> {
        let d = self.input_len();
        let mut out = Vec::with_capacity(samples.len());
        for chunk in samples.chunks(32) {
            let c = self.forward(&self.flatten(chunk)?, chunk.len())?;
            out.extend(c.output().chunks(d).map(|r| r.to_vec()));
        }
        Ok(out)
    }

    pub fn to_checkpoint(&self) -> ModelCheckpoint {
        let mut ck = ModelCheckpoint::new(CheckpointKind::Autoencoder);
        ck.set_config("autoencoder", &self.config);
        ck.hyperparams.insert("input.n_t".into(), self.n_t.to_string());
        ck.hyperparams.insert("input.n_s".into(), self.n_s.to_string());
        ck.tensors = self.params.to_named_tensors();
        ck
    }

    pub fn from_checkpoint(ck: &ModelCheckpoint) -> Result<Self, AeError> {
        if ck.kind != CheckpointKind::Autoencoder {
            return Err(AeError::WrongCheckpointKind(ck.kind));
        }
        let config: AeConfig = ck.config("autoencoder")?;
        let dim = |k: &str| -> Result<usize, AeError> { ck.hyperparam(k).and_then(|v| v.parse().ok()).ok_or_else(|| AeError::Csi(CsiError::CorruptPayload(format!("missing or invalid hyperparameter {k}")))) };
        let mut ae = Self::new(config, dim("input.n_t")?, dim("input.n_s")?, 0)?;
        ae.params.load_named_tensors(&ck.tensors)?;
        Ok(ae)
    }
}

/// Mean squared error and its gradient `2 (r - x) / n`.
pub(crate) fn mse_with_grad<T: Scalar>(r: &[T], x: &[T]) -> (f64, Vec<f64>) {
    let n = r.len() as f64;
    let diff: Vec<f64> = r.iter().zip(x).map(|(a, b)| a.as_f64() - b.as_f64()).collect();
    (diff.iter().map(|d| d * d).sum::<f64>() / n, diff.iter().map(|d| 2.0 * d / n).collect())
}

/// Total pair-batch loss: `lambda * sum(MSE_1 + MSE_2) / N + w / (2N) * sum(term)`,
/// with its gradient with respect to the stacked outputs (`[a_0, b_0, a_1, b_1, ...]`).
pub fn pair_batch_loss<T: Scalar>(cfg: &AeConfig, inputs: &[T], outputs: &[T], same: &[bool], d: usize) -> (f64, f64, Vec<T>) {
    let n = same.len() as f64;
    let mut grad = vec![0.0f64; outputs.len()];
    let (mut recon, mut contrast) = (0.0, 0.0);
    for (p, &y) in same.iter().enumerate() {
        for k in 0..2 {
            let off = (2 * p + k) * d;
            let (m, g) = mse_with_grad(&outputs[off..off + d], &inputs[off..off + d]);
            recon += m;
            for (dst, v) in grad[off..off + d].iter_mut().zip(g) {
                *dst += cfg.recon_weight * v / n;
            }
        }
        let (a, b) = outputs[2 * p * d..(2 * p + 2) * d].split_at(d);
        if let Some((c, ga, gb)) = correlation_with_grad(a, b) {
            let (term, dterm) = pair_term(c, y, cfg.xi, cfg.loss_variant);
            contrast += term;
            let scale = cfg.contrastive_weight * dterm / (2.0 * n);
            for (dst, v) in grad[2 * p * d..(2 * p + 1) * d].iter_mut().zip(ga) {
                *dst += scale * v;
            }
            for (dst, v) in grad[(2 * p + 1) * d..(2 * p + 2) * d].iter_mut().zip(gb) {
                *dst += scale * v;
            }
        }
    }
    let recon = cfg.recon_weight * recon / n;
    let contrast = cfg.contrastive_weight * contrast / (2.0 * n);
    (recon, contrast, grad.into_iter().map(T::of).collect())
}
