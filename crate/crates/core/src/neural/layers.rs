//! Batch normalization, dropout and ReLU.

use super::{Mode, NeuralError, ParamId, ParamSet, Scalar};

pub fn relu_forward<T: Scalar>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect()
}

/// `y` is the forward output; the subgradient at 0 is taken as 0.
pub fn relu_backward<T: Scalar>(y: &[T], dy: &[T]) -> Vec<T> {
    y.iter().zip(dy).map(|(&v, &d)| if v > T::zero() { d } else { T::zero() }).collect()
}

/// Counter-based mask source: the keep decision for element `i` is a pure
/// function of `(seed, step, layer, i)`, so masks never depend on thread
/// scheduling or on how many values were drawn before.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DropoutStream {
    pub seed: u64,
    pub step: u64,
    pub layer: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl DropoutStream {
    pub fn uniform(&self, index: u64) -> f64 {
        let h = splitmix64(splitmix64(splitmix64(self.seed ^ 0xD1B5_4A32_D192_ED03).wrapping_add(self.step)).wrapping_add(self.layer) ^ index.wrapping_mul(0xA24B_AED4_963E_E407));
        (h >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Returns the output and the per-element multiplier (0 or `1/(1-p)`), which
/// is also what the backward pass needs.
pub fn dropout_forward<T: Scalar>(x: &[T], p: f64, mode: Mode, stream: DropoutStream) -> (Vec<T>, Vec<T>) {
    if mode == Mode::Eval || p == 0.0 {
        return (x.to_vec(), vec![T::one(); x.len()]);
    }
    let scale = T::of(1.0 / (1.0 - p));
    let mask: Vec<T> = (0..x.len()).map(|i| if stream.uniform(i as u64) < p { T::zero() } else { scale }).collect();
    (x.iter().zip(&mask).map(|(&a, &m)| a * m).collect(), mask)
}

pub fn dropout_backward<T: Scalar>(dy: &[T], mask: &[T]) -> Vec<T> {
    dy.iter().zip(mask).map(|(&d, &m)| d * m).collect()
}

/// Per-channel normalization of `batch x C x len` activations over the
/// batch and length axes, with running statistics for evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchNorm1d {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
    pub channels: usize,
    pub eps: f64,
    pub momentum: f64,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    pub mode: Mode,
    pub xhat: Vec<T>,
    pub inv_std: Vec<T>,
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub count: usize,
}

impl BatchNorm1d {
    pub fn new<T: Scalar>(ps: &mut ParamSet<T>, prefix: &str, channels: usize) -> Self {
        Self {
            gamma: ps.add_const(&format!("{prefix}.gamma"), &[channels], 1.0),
            beta: ps.add_const(&format!("{prefix}.beta"), &[channels], 0.0),
            running_mean: ps.add_buffer(&format!("{prefix}.running_mean"), &[channels], 0.0),
            running_var: ps.add_buffer(&format!("{prefix}.running_var"), &[channels], 1.0),
            channels,
            eps: 1e-5,
            momentum: 0.1,
        }
    }

    pub fn attach<T: Scalar>(ps: &ParamSet<T>, prefix: &str, channels: usize) -> Result<Self, NeuralError> {
        let find = |n: &str| ps.find(&format!("{prefix}.{n}")).ok_or_else(|| NeuralError::ShapeMismatch(format!("missing parameter {prefix}.{n}")));
        Ok(Self { gamma: find("gamma")?, beta: find("beta")?, running_mean: find("running_mean")?, running_var: find("running_var")?, channels, eps: 1e-5, momentum: 0.1 })
    }

    /// In `Train` mode normalizes with batch statistics (biased variance);
    /// `Eval` uses the running estimates. Running estimates are only changed
    /// by [`BatchNorm1d::update_running`].
    pub fn forward<T: Scalar>(&self, ps: &ParamSet<T>, x: &[T], batch: usize, len: usize, mode: Mode) -> Result<(Vec<T>, BatchNormCache<T>), NeuralError> {
        let ch = self.channels;
        if x.len() != batch * ch * len {
            return Err(NeuralError::ShapeMismatch(format!("batchnorm expects {batch}x{ch}x{len}, got {} values", x.len())));
        }
        if mode == Mode::Train && batch < 2 {
            return Err(NeuralError::BatchTooSmall(batch));
        }
        let n = batch * len;
        let mut mean = vec![T::zero(); ch];
        let mut var = vec![T::zero(); ch];
        if mode == Mode::Train {
            for c in 0..ch {
                let mut s = T::zero();
                for b in 0..batch {
                    s = s + x[(b * ch + c) * len..(b * ch + c + 1) * len].iter().copied().sum();
                }
                let m = s / T::of(n as f64);
                let mut v = T::zero();
                for b in 0..batch {
                    for &xv in &x[(b * ch + c) * len..(b * ch + c + 1) * len] {
                        v = v + (xv - m) * (xv - m);
                    }
                }
                mean[c] = m;
                var[c] = v / T::of(n as f64);
            }
        } else {
            mean.copy_from_slice(ps.value(self.running_mean));
            var.copy_from_slice(ps.value(self.running_var));
        }
        let eps = T::of(self.eps);
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let gamma = ps.value(self.gamma);
        let beta = ps.value(self.beta);
        let mut xhat = vec![T::zero(); x.len()];
        let mut y = vec![T::zero(); x.len()];
        for b in 0..batch {
            for c in 0..ch {
                let off = (b * ch + c) * len;
                for t in 0..len {
                    let h = (x[off + t] - mean[c]) * inv_std[c];
                    xhat[off + t] = h;
                    y[off + t] = gamma[c] * h + beta[c];
                }
            }
        }
        Ok((y, BatchNormCache { mode, xhat, inv_std, mean, var, count: n }))
    }

    /// Folds the batch statistics of a `Train` forward pass into the running
    /// estimates (momentum update, unbiased variance).
    pub fn update_running<T: Scalar>(&self, ps: &mut ParamSet<T>, cache: &BatchNormCache<T>) {
        if cache.mode != Mode::Train {
            return;
        }
        let mom = T::of(self.momentum);
        let n = cache.count as f64;
        let unbias = T::of(n / (n - 1.0).max(1.0));
        for c in 0..self.channels {
            let rm = ps.value(self.running_mean)[c];
            ps.value_mut(self.running_mean)[c] = (T::one() - mom) * rm + mom * cache.mean[c];
            let rv = ps.value(self.running_var)[c];
            ps.value_mut(self.running_var)[c] = (T::one() - mom) * rv + mom * cache.var[c] * unbias;
        }
    }

    pub fn backward<T: Scalar>(&self, ps: &mut ParamSet<T>, cache: &BatchNormCache<T>, dy: &[T], batch: usize, len: usize) -> Vec<T> {
        let ch = self.channels;
        let n = T::of((batch * len) as f64);
        let mut sum_dy = vec![T::zero(); ch];
        let mut sum_dy_xhat = vec![T::zero(); ch];
        for b in 0..batch {
            for c in 0..ch {
                let off = (b * ch + c) * len;
                for t in 0..len {
                    sum_dy[c] = sum_dy[c] + dy[off + t];
                    sum_dy_xhat[c] = sum_dy_xhat[c] + dy[off + t] * cache.xhat[off + t];
                }
            }
        }
        let gamma = ps.value(self.gamma).to_vec();
        let mut dx = vec![T::zero(); dy.len()];
        for b in 0..batch {
            for c in 0..ch {
                let off = (b * ch + c) * len;
                let k = gamma[c] * cache.inv_std[c];
                for t in 0..len {
                    dx[off + t] = match cache.mode {
                        Mode::Train => k / n * (n * dy[off + t] - sum_dy[c] - cache.xhat[off + t] * sum_dy_xhat[c]),
                        Mode::Eval => k * dy[off + t],
                    };
                }
            }
        }
        let gg = ps.grad_mut(self.gamma);
        for c in 0..ch {
            gg[c] = gg[c] + sum_dy_xhat[c];
        }
        let gb = ps.grad_mut(self.beta);
        for c in 0..ch {
            gb[c] = gb[c] + sum_dy[c];
        }
        dx
    }
}
