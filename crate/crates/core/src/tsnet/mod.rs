//! Two-branch classifier: an LSTM over the measurement axis (temporal
//! features) and a stack of 1-D convolutions (spatial features), fused as
//! `F = alpha * F_t + beta * F_s` and mapped to class logits.

mod topn;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CheckpointKind, CsiError, ModelCheckpoint, Sample, DEFAULT_NUM_CLASSES};
use crate::neural::{
    dropout_backward, dropout_forward, relu_backward, relu_forward, BatchNorm1d, BatchNormCache, Conv1d, DropoutStream, Linear, Lstm, LstmCache, Mode, NeuralError,
    ParamSet, Scalar,
};

pub use topn::{evaluate_logits, evaluate_topn, predict_topn, rank_classes, Prediction, TopNReport};
pub use train::{train_tsnet, EpochRecord, TrainOptions, TrainOutcome};

#[derive(Debug, Error, PartialEq)]
pub enum TsNetError {
    #[error("alpha + beta must equal 1 with both in [0, 1] (got alpha {alpha}, beta {beta})")]
    WeightConstraintViolated { alpha: f64, beta: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training needs at least two classes")]
    SingleClass,
    #[error("sample {0} has no label")]
    UnlabeledSample(usize),
    #[error("N must lie in [1, {classes}], got {n}")]
    BadN { n: usize, classes: usize },
    #[error("checkpoint holds a {0:?} model, expected TsNet")]
    WrongCheckpointKind(CheckpointKind),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Csi(#[from] CsiError),
}

/// Which axis of an `N_t x N_s` sample the convolutions slide along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpatialAxis {
    /// Measurements are input channels; kernels slide across subcarriers.
    Subcarrier,
    /// Subcarriers are input channels; kernels slide across measurements.
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsNetConfig {
    pub lstm_hidden: usize,
    pub conv_channels: [usize; 3],
    pub kernel_sizes: [usize; 3],
    pub alpha: f64,
    pub beta: f64,
    pub fusion_dim: usize,
    pub num_classes: usize,
    pub spatial_axis: SpatialAxis,
}

impl Default for TsNetConfig {
    fn default() -> Self {
        Self {
            lstm_hidden: 128,
            conv_channels: [32, 64, 64],
            kernel_sizes: [7, 5, 3],
            alpha: 0.2,
            beta: 0.8,
            fusion_dim: 128,
            num_classes: DEFAULT_NUM_CLASSES,
            spatial_axis: SpatialAxis::Subcarrier,
        }
    }
}

impl TsNetConfig {
    pub fn validate(&self) -> Result<(), TsNetError> {
        check_weights(self.alpha, self.beta)?;
        if self.lstm_hidden == 0 || self.fusion_dim == 0 || self.conv_channels.contains(&0) || self.kernel_sizes.contains(&0) {
            return Err(TsNetError::InvalidConfig("layer sizes must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(TsNetError::InvalidConfig("need at least 2 classes".into()));
        }
        Ok(())
    }
}

fn check_weights(alpha: f64, beta: f64) -> Result<(), TsNetError> {
    let ok = (0.0..=1.0).contains(&alpha) && (0.0..=1.0).contains(&beta) && (alpha + beta - 1.0).abs() <= 1e-9;
    if ok {
        Ok(())
    } else {
        Err(TsNetError::WeightConstraintViolated { alpha, beta })
    }
}

/// `alpha * f_t + beta * f_s`, elementwise.
pub fn fuse<T: Scalar>(f_t: &[T], f_s: &[T], alpha: f64, beta: f64) -> Result<Vec<T>, TsNetError> {
    check_weights(alpha, beta)?;
    if f_t.len() != f_s.len() {
        return Err(TsNetError::ShapeMismatch(format!("temporal features {} vs spatial features {}", f_t.len(), f_s.len())));
    }
    let (a, b) = (T::of(alpha), T::of(beta));
    Ok(f_t.iter().zip(f_s).map(|(&t, &s)| a * t + b * s).collect())
}

/// Dropout settings for one training forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutPlan {
    pub p: f64,
    pub seed: u64,
    pub step: u64,
}

impl DropoutPlan {
    pub const OFF: DropoutPlan = DropoutPlan { p: 0.0, seed: 0, step: 0 };
}

#[derive(Debug, Clone)]
pub struct TsNet<T> {
    pub config: TsNetConfig,
    pub n_t: usize,
    pub n_s: usize,
    pub params: ParamSet<T>,
    lstm: Lstm,
    temporal_proj: Linear,
    convs: [Conv1d; 3],
    bns: [BatchNorm1d; 3],
    channel_map: Linear,
    spatial_proj: Linear,
    classifier: Linear,
}

/// Intermediate values of a forward pass needed by [`TsNet::backward`].
#[derive(Debug, Clone)]
pub struct TsNetCache<T> {
    batch: usize,
    input: Vec<T>,
    lstm: Vec<LstmCache<T>>,
    h_last: Vec<T>,
    conv_in: Vec<Vec<T>>,
    relu_out: Vec<Vec<T>>,
    bn: Vec<BatchNormCache<T>>,
    masks: Vec<Vec<T>>,
    map_in: Vec<T>,
    f_s_raw: Vec<T>,
    fused: Vec<T>,
    pub f_t: Vec<T>,
    pub f_s: Vec<T>,
}

impl<T: Scalar> TsNet<T> {
    /// Fresh network for `n_t x n_s` samples, initialized from `seed`.
    pub fn new(config: TsNetConfig, n_t: usize, n_s: usize, seed: u64) -> Result<Self, TsNetError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamSet::new();
        let (c_in, len) = conv_geometry(&config, n_t, n_s);
        let lens = conv_lengths(&config, len)?;
        let ch = config.conv_channels;
        let ks = config.kernel_sizes;
        let lstm = Lstm::new(&mut ps, "lstm", n_s, config.lstm_hidden, &mut rng);
        let temporal_proj = Linear::new(&mut ps, "temporal_proj", config.lstm_hidden, config.fusion_dim, &mut rng);
        let conv1 = Conv1d::new(&mut ps, "conv1", c_in, ch[0], ks[0], &mut rng);
        let bn1 = BatchNorm1d::new(&mut ps, "bn1", ch[0]);
        let conv2 = Conv1d::new(&mut ps, "conv2", ch[0], ch[1], ks[1], &mut rng);
        let bn2 = BatchNorm1d::new(&mut ps, "bn2", ch[1]);
        let conv3 = Conv1d::new(&mut ps, "conv3", ch[1], ch[2], ks[2], &mut rng);
        let bn3 = BatchNorm1d::new(&mut ps, "bn3", ch[2]);
        let channel_map = Linear::new(&mut ps, "channel_map", lens[3], 1, &mut rng);
        let spatial_proj = Linear::new(&mut ps, "spatial_proj", ch[2], config.fusion_dim, &mut rng);
        let classifier = Linear::new(&mut ps, "classifier", config.fusion_dim, config.num_classes, &mut rng);
        Ok(Self { config, n_t, n_s, params: ps, lstm, temporal_proj, convs: [conv1, conv2, conv3], bns: [bn1, bn2, bn3], channel_map, spatial_proj, classifier })
    }

    /// Rebuilds the layer handles around an existing parameter set.
    pub fn from_params(config: TsNetConfig, n_t: usize, n_s: usize, params: ParamSet<T>) -> Result<Self, TsNetError> {
        let mut net = Self::new(config, n_t, n_s, 0)?;
        let expected: Vec<(String, Vec<usize>)> = net.params.params().iter().map(|p| (p.name.clone(), p.value.shape().to_vec())).collect();
        let found: Vec<(String, Vec<usize>)> = params.params().iter().map(|p| (p.name.clone(), p.value.shape().to_vec())).collect();
        if expected != found {
            return Err(TsNetError::ShapeMismatch("parameter set does not match the configuration".into()));
        }
        net.params = params;
        Ok(net)
    }

    /// Same network in another precision.
    pub fn cast<U: Scalar>(&self) -> TsNet<U> {
        TsNet::from_params(self.config.clone(), self.n_t, self.n_s, self.params.cast()).expect("same layout")
    }

    pub fn sample_shape(&self) -> (usize, usize) {
        (self.n_t, self.n_s)
    }

    /// Flattens samples into a `batch x N_t x N_s` input.
    pub fn batch_input(&self, samples: &[&Sample]) -> Result<Vec<T>, TsNetError> {
        let mut x = Vec::with_capacity(samples.len() * self.n_t * self.n_s);
        for s in samples {
            if s.shape() != (self.n_t, self.n_s) {
                return Err(TsNetError::ShapeMismatch(format!("sample shape {:?}, model expects {:?}", s.shape(), (self.n_t, self.n_s))));
            }
            x.extend(s.values.as_slice().iter().map(|&v| T::of(v)));
        }
        Ok(x)
    }

    fn spatial_input(&self, x: &[T], batch: usize) -> Vec<T> {
        match self.config.spatial_axis {
            SpatialAxis::Subcarrier => x.to_vec(),
            SpatialAxis::Time => {
                let (nt, ns) = (self.n_t, self.n_s);
                let mut out = vec![T::zero(); x.len()];
                for b in 0..batch {
                    for t in 0..nt {
                        for s in 0..ns {
                            out[b * nt * ns + s * nt + t] = x[b * nt * ns + t * ns + s];
                        }
                    }
                }
                out
            }
        }
    }

    /// Logits (`batch x M_c`) plus the cache for [`TsNet::backward`].
    /// Batch-norm running statistics are not touched; see
    /// [`TsNet::update_running_stats`].
    pub fn forward(&self, x: &[T], batch: usize, mode: Mode, dropout: DropoutPlan) -> Result<(Vec<T>, TsNetCache<T>), TsNetError> {
        let (nt, ns) = (self.n_t, self.n_s);
        if x.len() != batch * nt * ns || batch == 0 {
            return Err(TsNetError::ShapeMismatch(format!("expected a {batch}x{nt}x{ns} batch, got {} values", x.len())));
        }
        let ps = &self.params;
        let hd = self.config.lstm_hidden;
        let lstm_caches: Vec<LstmCache<T>> = (0..batch)
            .into_par_iter()
            .map(|b| self.lstm.forward_seq(ps, &x[b * nt * ns..(b + 1) * nt * ns], None, None))
            .collect::<Result<_, _>>()?;
        let mut h_last = Vec::with_capacity(batch * hd);
        for c in &lstm_caches {
            h_last.extend_from_slice(c.final_hidden(hd));
        }
        let f_t = self.temporal_proj.forward(ps, &h_last, batch)?;

        let (_, len0) = conv_geometry(&self.config, nt, ns);
        let lens = conv_lengths(&self.config, len0)?;
        let mut a = self.spatial_input(x, batch);
        let (mut conv_in, mut relu_out, mut bn_caches, mut masks) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..3 {
            let z = self.convs[i].forward(ps, &a, batch, lens[i])?;
            conv_in.push(a);
            let r = relu_forward(&z);
            let (y, cache) = self.bns[i].forward(ps, &r, batch, lens[i + 1], mode)?;
            relu_out.push(r);
            bn_caches.push(cache);
            let stream = DropoutStream { seed: dropout.seed, step: dropout.step, layer: i as u64 };
            let (d, mask) = dropout_forward(&y, dropout.p, mode, stream);
            masks.push(mask);
            a = d;
        }
        let c3 = self.config.conv_channels[2];
        let spatial_map = a;
        let f_s_raw = self.channel_map.forward(ps, &spatial_map, batch * c3)?;
        let f_s = self.spatial_proj.forward(ps, &f_s_raw, batch)?;
        let fused = fuse(&f_t, &f_s, self.config.alpha, self.config.beta)?;
        let logits = self.classifier.forward(ps, &fused, batch)?;
        let cache = TsNetCache {
            batch,
            input: x.to_vec(),
            lstm: lstm_caches,
            h_last,
            conv_in,
            relu_out,
            bn: bn_caches,
            masks,
            map_in: spatial_map,
            f_s_raw,
            fused,
            f_t,
            f_s,
        };
        Ok((logits, cache))
    }

    /// Accumulates parameter gradients for `dL/dlogits`.
    pub fn backward(&mut self, cache: &TsNetCache<T>, dlogits: &[T]) {
        let batch = cache.batch;
        let (nt, ns) = (self.n_t, self.n_s);
        let hd = self.config.lstm_hidden;
        let c3 = self.config.conv_channels[2];
        let (alpha, beta) = (T::of(self.config.alpha), T::of(self.config.beta));
        let d_fused = self.classifier.backward(&mut self.params, &cache.fused, dlogits, batch);
        let d_ft: Vec<T> = d_fused.iter().map(|&v| alpha * v).collect();
        let d_fs: Vec<T> = d_fused.iter().map(|&v| beta * v).collect();

        // spatial branch
        let d_raw = self.spatial_proj.backward(&mut self.params, &cache.f_s_raw, &d_fs, batch);
        let mut da = self.channel_map.backward(&mut self.params, &cache.map_in, &d_raw, batch * c3);
        let (_, len0) = conv_geometry(&self.config, nt, ns);
        let lens = conv_lengths(&self.config, len0).expect("validated in forward");
        for i in (0..3).rev() {
            let dy = dropout_backward(&da, &cache.masks[i]);
            let dr = self.bns[i].backward(&mut self.params, &cache.bn[i], &dy, batch, lens[i + 1]);
            let dz = relu_backward(&cache.relu_out[i], &dr);
            da = self.convs[i].backward(&mut self.params, &cache.conv_in[i], &dz, batch, lens[i]);
        }

        // temporal branch
        let d_h = self.temporal_proj.backward(&mut self.params, &cache.h_last, &d_ft, batch);
        let ps = &self.params;
        let lstm = self.lstm;
        let grads: Vec<_> = (0..batch)
            .into_par_iter()
            .map(|b| {
                let steps = cache.lstm[b].steps;
                let mut dh = vec![T::zero(); steps * hd];
                dh[(steps - 1) * hd..].copy_from_slice(&d_h[b * hd..(b + 1) * hd]);
                lstm.backward(ps, &cache.input[b * nt * ns..(b + 1) * nt * ns], &cache.lstm[b], &dh, None)
            })
            .collect();
        for g in &grads {
            self.lstm.accumulate(&mut self.params, g);
        }
    }

    /// Folds the batch statistics of a training forward pass into the
    /// batch-norm running estimates.
    pub fn update_running_stats(&mut self, cache: &TsNetCache<T>) {
        for (bn, c) in self.bns.iter().zip(&cache.bn) {
            bn.update_running(&mut self.params, c);
        }
    }

    /// Eval-mode logits for a list of samples, processed in chunks.
    pub fn logits(&self, samples: &[&Sample]) -> Result<Vec<T>, TsNetError> {
        let mut out = Vec::with_capacity(samples.len() * self.config.num_classes);
        for chunk in samples.chunks(64) {
            let x = self.batch_input(chunk)?;
            out.extend(self.forward(&x, chunk.len(), Mode::Eval, DropoutPlan::OFF)?.0);
        }
        Ok(out)
    }

    pub fn to_checkpoint(&self) -> ModelCheckpoint {
        let mut ck = ModelCheckpoint::new(CheckpointKind::TsNet);
        ck.set_config("tsnet", &self.config);
        ck.hyperparams.insert("input.n_t".into(), self.n_t.to_string());
        ck.hyperparams.insert("input.n_s".into(), self.n_s.to_string());
        ck.tensors = self.params.to_named_tensors();
        ck
    }

    pub fn from_checkpoint(ck: &ModelCheckpoint) -> Result<Self, TsNetError> {
        if ck.kind != CheckpointKind::TsNet {
            return Err(TsNetError::WrongCheckpointKind(ck.kind));
        }
        let config: TsNetConfig = ck.config("tsnet")?;
        let dim = |k: &str| -> Result<usize, TsNetError> {
            ck.hyperparam(k).and_then(|v| v.parse().ok()).ok_or_else(|| TsNetError::Csi(CsiError::CorruptPayload(format!("missing or invalid hyperparameter {k}"))))
        };
        let mut net = Self::new(config, dim("input.n_t")?, dim("input.n_s")?, 0)?;
        net.params.load_named_tensors(&ck.tensors)?;
        Ok(net)
    }
}

fn conv_geometry(cfg: &TsNetConfig, n_t: usize, n_s: usize) -> (usize, usize) {
    match cfg.spatial_axis {
        SpatialAxis::Subcarrier => (n_t, n_s),
        SpatialAxis::Time => (n_s, n_t),
    }
}

fn conv_lengths(cfg: &TsNetConfig, len0: usize) -> Result<[usize; 4], TsNetError> {
    let mut lens = [len0; 4];
    for i in 0..3 {
        let k = cfg.kernel_sizes[i];
        if lens[i] < k {
            return Err(TsNetError::ShapeMismatch(format!("convolution {} has kernel {} but only {} positions", i + 1, k, lens[i])));
        }
        lens[i + 1] = lens[i] - k + 1;
    }
    Ok(lens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{one_hot, softmax_cross_entropy};
    use rand::Rng;

    pub(crate) fn small_config() -> TsNetConfig {
        TsNetConfig { lstm_hidden: 5, conv_channels: [3, 4, 3], kernel_sizes: [3, 2, 2], alpha: 0.3, beta: 0.7, fusion_dim: 4, num_classes: 4, spatial_axis: SpatialAxis::Subcarrier }
    }

    fn random_input(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.5f32..1.5) as f64).collect()
    }

    #[test]
    fn fuse_examples() {
        assert_eq!(fuse(&[1.0, 1.0], &[0.0, 0.0], 0.2, 0.8).unwrap(), vec![0.2, 0.2]);
        assert_eq!(fuse(&[3.0, 4.0], &[5.0, 6.0], 0.0, 1.0).unwrap(), vec![5.0, 6.0]);
        let v = [0.25f64, -1.0, 7.5];
        for a in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let f = fuse(&v, &v, a, 1.0 - a).unwrap();
            for (x, y) in f.iter().zip(&v) {
                assert!((x - y).abs() < 1e-15);
            }
        }
        assert!(matches!(fuse(&[1.0], &[1.0], 0.5, 0.6), Err(TsNetError::WeightConstraintViolated { .. })));
        assert!(matches!(fuse(&[1.0], &[1.0, 2.0], 0.5, 0.5), Err(TsNetError::ShapeMismatch(_))));
    }

    #[test]
    fn forward_shape_and_determinism() {
        let net = TsNet::<f64>::new(small_config(), 6, 8, 3).unwrap();
        let x = random_input(2 * 6 * 8, 1);
        let (a, _) = net.forward(&x, 2, Mode::Eval, DropoutPlan::OFF).unwrap();
        let (b, _) = TsNet::<f64>::new(small_config(), 6, 8, 3).unwrap().forward(&x, 2, Mode::Eval, DropoutPlan::OFF).unwrap();
        assert_eq!(a.len(), 8);
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert!(net.forward(&x[1..], 2, Mode::Eval, DropoutPlan::OFF).is_err());
    }

    #[test]
    fn temporal_only_ignores_spatial_parameters() {
        let cfg = TsNetConfig { alpha: 1.0, beta: 0.0, ..small_config() };
        let mut net = TsNet::<f64>::new(cfg, 6, 8, 3).unwrap();
        let x = random_input(2 * 6 * 8, 2);
        let (z, cache) = net.forward(&x, 2, Mode::Train, DropoutPlan::OFF).unwrap();
        let (_, dz) = softmax_cross_entropy(&z, &one_hot(&[0, 3], 4), 4).unwrap();
        net.backward(&cache, &dz);
        for name in ["conv1.w", "conv2.b", "conv3.w", "bn2.gamma", "channel_map.w", "spatial_proj.w"] {
            let id = net.params.find(name).unwrap();
            assert!(net.params.grad(id).iter().all(|&g| g == 0.0), "{name}");
        }
        let id = net.params.find("conv1.w").unwrap();
        net.params.value_mut(id).iter_mut().for_each(|v| *v *= 3.0);
        let (z2, _) = net.forward(&x, 2, Mode::Train, DropoutPlan::OFF).unwrap();
        assert_eq!(z, z2);
    }

    #[test]
    fn time_axis_variant_runs() {
        let cfg = TsNetConfig { spatial_axis: SpatialAxis::Time, ..small_config() };
        let net = TsNet::<f64>::new(cfg, 9, 4, 0).unwrap();
        let (z, _) = net.forward(&random_input(2 * 9 * 4, 5), 2, Mode::Train, DropoutPlan { p: 0.5, seed: 1, step: 0 }).unwrap();
        assert!(z.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn too_few_positions_for_kernels() {
        assert!(matches!(TsNet::<f32>::new(small_config(), 6, 4, 0), Err(TsNetError::ShapeMismatch(_))));
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = TsNet::<f32>::new(small_config(), 6, 8, 11).unwrap();
        let ck = crate::model::load_checkpoint(&crate::model::save_checkpoint(&net.to_checkpoint())).unwrap();
        let back = TsNet::<f32>::from_checkpoint(&ck).unwrap();
        assert_eq!(back.config, net.config);
        assert_eq!(back.params.to_named_tensors(), net.params.to_named_tensors());
        let mut wrong = ck.clone();
        wrong.kind = CheckpointKind::Autoencoder;
        assert!(matches!(TsNet::<f32>::from_checkpoint(&wrong), Err(TsNetError::WrongCheckpointKind(_))));
    }

    fn grad_reports(seed: u64) -> (crate::neural::GradCheckReport, crate::neural::GradCheckReport) {
        use crate::neural::{grad_check, grad_check_against, GradCheckOptions};
        let (nt, ns) = (6, 8);
        let x = random_input(2 * nt * ns, seed);
        let labels = one_hot(&[1, 3], 4);
        let net64 = TsNet::<f64>::new(small_config(), nt, ns, seed).unwrap();
        let loss = |net: &TsNet<f64>| {
            let x = x.clone();
            let labels = labels.clone();
            let mut net = net.clone();
            move |ps: &mut ParamSet<f64>, grad: bool| -> Result<f64, NeuralError> {
                net.params = ps.clone();
                let (z, cache) = net.forward(&x, 2, Mode::Train, DropoutPlan::OFF).map_err(|e| NeuralError::ShapeMismatch(e.to_string()))?;
                let (l, dz) = softmax_cross_entropy(&z, &labels, 4)?;
                if grad {
                    net.params.zero_grad();
                    net.backward(&cache, &dz);
                    *ps = net.params.clone();
                }
                Ok(l)
            }
        };
        let mut ps = net64.params.clone();
        let r64 = grad_check(&mut ps, loss(&net64), &GradCheckOptions::default()).unwrap();
        let mut net32 = net64.cast::<f32>();
        let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let (z, cache) = net32.forward(&x32, 2, Mode::Train, DropoutPlan::OFF).unwrap();
        let (_, dz) = softmax_cross_entropy(&z, &one_hot(&[1, 3], 4), 4).unwrap();
        net32.backward(&cache, &dz);
        let mut reference = net32.params.cast::<f64>();
        let r32 = grad_check_against(&net32.params, &mut reference, loss(&net64), &GradCheckOptions { tolerance: 1e-3, floor: 1e-4, ..Default::default() }).unwrap();
        (r64, r32)
    }

    #[test]
    fn full_network_gradients_match_finite_differences() {
        for seed in 1..=8 {
            let (r64, r32) = grad_reports(seed);
            assert!(r64.passed, "{r64:?}");
            assert!(r32.passed, "{r32:?}");
        }
    }
}
