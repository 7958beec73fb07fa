use rand::Rng;

use super::{axpy, dot, NeuralError, ParamId, ParamSet, Scalar};

/// Valid (unpadded), stride-1 cross-correlation:
/// `y[o][t] = b[o] + sum_c sum_k w[o][c][k] * x[c][t + k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conv1d {
    pub w: ParamId,
    pub b: ParamId,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
}

impl Conv1d {
    pub fn new<T: Scalar>(ps: &mut ParamSet<T>, prefix: &str, in_channels: usize, out_channels: usize, kernel: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / ((in_channels * kernel).max(1) as f64).sqrt();
        let w = ps.add_uniform(&format!("{prefix}.w"), &[out_channels, in_channels, kernel], bound, rng);
        let b = ps.add_uniform(&format!("{prefix}.b"), &[out_channels], bound, rng);
        Self { w, b, in_channels, out_channels, kernel }
    }

    pub fn attach<T: Scalar>(ps: &ParamSet<T>, prefix: &str, in_channels: usize, out_channels: usize, kernel: usize) -> Result<Self, NeuralError> {
        let find = |n: &str| ps.find(n).ok_or_else(|| NeuralError::ShapeMismatch(format!("missing parameter {n}")));
        Ok(Self { w: find(&format!("{prefix}.w"))?, b: find(&format!("{prefix}.b"))?, in_channels, out_channels, kernel })
    }

    pub fn output_len(&self, len: usize) -> Result<usize, NeuralError> {
        if len < self.kernel {
            return Err(NeuralError::KernelTooLarge { kernel: self.kernel, len });
        }
        Ok(len - self.kernel + 1)
    }

    /// `x` is `batch x C_in x len`; returns `batch x C_out x (len - K + 1)`.
    pub fn forward<T: Scalar>(&self, ps: &ParamSet<T>, x: &[T], batch: usize, len: usize) -> Result<Vec<T>, NeuralError> {
        let out_len = self.output_len(len)?;
        if x.len() != batch * self.in_channels * len {
            return Err(NeuralError::ShapeMismatch(format!("conv expects {}x{}x{}, got {} values", batch, self.in_channels, len, x.len())));
        }
        let (ci, co, k) = (self.in_channels, self.out_channels, self.kernel);
        let w = ps.value(self.w);
        let b = ps.value(self.b);
        let mut y = vec![T::zero(); batch * co * out_len];
        for s in 0..batch {
            let xs = &x[s * ci * len..(s + 1) * ci * len];
            for o in 0..co {
                let yo = &mut y[(s * co + o) * out_len..(s * co + o + 1) * out_len];
                yo.iter_mut().for_each(|v| *v = b[o]);
                for c in 0..ci {
                    let xc = &xs[c * len..(c + 1) * len];
                    let wk = &w[(o * ci + c) * k..(o * ci + c + 1) * k];
                    for (kk, &wv) in wk.iter().enumerate() {
                        axpy(yo, wv, &xc[kk..kk + out_len]);
                    }
                }
            }
        }
        Ok(y)
    }

    /// Accumulates kernel/bias gradients; returns `dL/dx`.
    pub fn backward<T: Scalar>(&self, ps: &mut ParamSet<T>, x: &[T], dy: &[T], batch: usize, len: usize) -> Vec<T> {
        let (ci, co, k) = (self.in_channels, self.out_channels, self.kernel);
        let out_len = len + 1 - k;
        let mut dx = vec![T::zero(); x.len()];
        {
            let w = ps.value(self.w);
            for s in 0..batch {
                for o in 0..co {
                    let dyo = &dy[(s * co + o) * out_len..(s * co + o + 1) * out_len];
                    for c in 0..ci {
                        let base = s * ci * len + c * len;
                        let wk = &w[(o * ci + c) * k..(o * ci + c + 1) * k];
                        for (kk, &wv) in wk.iter().enumerate() {
                            axpy(&mut dx[base + kk..base + kk + out_len], wv, dyo);
                        }
                    }
                }
            }
        }
        let gw = ps.grad_mut(self.w);
        for s in 0..batch {
            for o in 0..co {
                let dyo = &dy[(s * co + o) * out_len..(s * co + o + 1) * out_len];
                for c in 0..ci {
                    let xc = &x[s * ci * len + c * len..s * ci * len + (c + 1) * len];
                    for kk in 0..k {
                        let idx = (o * ci + c) * k + kk;
                        gw[idx] = gw[idx] + dot(dyo, &xc[kk..kk + out_len]);
                    }
                }
            }
        }
        let gb = ps.grad_mut(self.b);
        for s in 0..batch {
            for o in 0..co {
                gb[o] = gb[o] + dy[(s * co + o) * out_len..(s * co + o + 1) * out_len].iter().copied().sum();
            }
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layer(ci: usize, co: usize, k: usize, seed: u64) -> (ParamSet<f64>, Conv1d) {
        let mut ps = ParamSet::new();
        let c = Conv1d::new(&mut ps, "conv", ci, co, k, &mut ChaCha8Rng::seed_from_u64(seed));
        (ps, c)
    }

    #[test]
    fn unit_kernel_is_identity() {
        let (mut ps, c) = layer(1, 1, 1, 0);
        ps.value_mut(c.w)[0] = 1.0;
        ps.value_mut(c.b)[0] = 0.0;
        assert_eq!(c.forward(&ps, &[3.0, -1.0, 2.0], 1, 3).unwrap(), vec![3.0, -1.0, 2.0]);
    }

    #[test]
    fn first_differences() {
        let (mut ps, c) = layer(1, 1, 2, 0);
        ps.value_mut(c.w).copy_from_slice(&[-1.0, 1.0]);
        ps.value_mut(c.b)[0] = 0.0;
        assert_eq!(c.forward(&ps, &[1.0, 2.0, 4.0], 1, 3).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn kernel_too_large() {
        let (ps, c) = layer(1, 1, 4, 0);
        assert_eq!(c.forward(&ps, &[0.0; 3], 1, 3), Err(NeuralError::KernelTooLarge { kernel: 4, len: 3 }));
    }

    proptest! {
        #[test]
        fn matches_naive_loops(ci in 1usize..4, co in 1usize..4, k in 1usize..4, extra in 0usize..6, batch in 1usize..3, seed in 0u64..1000) {
            let len = k + extra;
            let (ps, c) = layer(ci, co, k, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let x: Vec<f64> = (0..batch * ci * len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = c.forward(&ps, &x, batch, len).unwrap();
            let (w, b) = (ps.value(c.w), ps.value(c.b));
            let ol = len - k + 1;
            for s in 0..batch {
                for o in 0..co {
                    for t in 0..ol {
                        let mut acc = b[o];
                        for cc in 0..ci {
                            for kk in 0..k {
                                acc += w[(o * ci + cc) * k + kk] * x[s * ci * len + cc * len + t + kk];
                            }
                        }
                        prop_assert!((acc - y[(s * co + o) * ol + t]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let (mut ps, c) = layer(2, 3, 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (batch, len) = (2, 7);
        let x: Vec<f64> = (0..batch * 2 * len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let coef: Vec<f64> = (0..batch * 3 * 5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |ps: &ParamSet<f64>, x: &[f64]| c.forward(ps, x, batch, len).unwrap().iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>();
        let dx = c.backward(&mut ps, &x, &coef, batch, len);
        let eps = 1e-6;
        for id in [c.w, c.b] {
            for kk in 0..ps.value(id).len() {
                let orig = ps.value(id)[kk];
                ps.value_mut(id)[kk] = orig + eps;
                let up = loss(&ps, &x);
                ps.value_mut(id)[kk] = orig - eps;
                let down = loss(&ps, &x);
                ps.value_mut(id)[kk] = orig;
                assert!(((up - down) / (2.0 * eps) - ps.grad(id)[kk]).abs() < 1e-8);
            }
        }
        for kk in 0..x.len() {
            let mut xp = x.clone();
            xp[kk] += eps;
            let up = loss(&ps, &xp);
            xp[kk] -= 2.0 * eps;
            let down = loss(&ps, &xp);
            assert!(((up - down) / (2.0 * eps) - dx[kk]).abs() < 1e-8);
        }
    }
}
