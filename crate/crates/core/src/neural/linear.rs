use rand::Rng;

use super::{axpy, dot, NeuralError, ParamId, ParamSet, Scalar};

/// Fully connected layer `y = W x + b` with `W` stored `out x in`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    /// Registers `{prefix}.w` and `{prefix}.b` with uniform `1/sqrt(in)` init.
    pub fn new<T: Scalar>(ps: &mut ParamSet<T>, prefix: &str, input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        let w = ps.add_uniform(&format!("{prefix}.w"), &[output, input], bound, rng);
        let b = ps.add_uniform(&format!("{prefix}.b"), &[output], bound, rng);
        Self { w, b, input, output }
    }

    /// Reattaches to parameters already present in `ps`.
    pub fn attach<T: Scalar>(ps: &ParamSet<T>, prefix: &str, input: usize, output: usize) -> Result<Self, NeuralError> {
        let find = |n: &str| ps.find(n).ok_or_else(|| NeuralError::ShapeMismatch(format!("missing parameter {n}")));
        Ok(Self { w: find(&format!("{prefix}.w"))?, b: find(&format!("{prefix}.b"))?, input, output })
    }

    /// `x` is `batch x in`, row-major; returns `batch x out`.
    pub fn forward<T: Scalar>(&self, ps: &ParamSet<T>, x: &[T], batch: usize) -> Result<Vec<T>, NeuralError> {
        if x.len() != batch * self.input {
            return Err(NeuralError::ShapeMismatch(format!("linear expects {}x{}, got {} values", batch, self.input, x.len())));
        }
        let w = ps.value(self.w);
        let b = ps.value(self.b);
        let mut y = vec![T::zero(); batch * self.output];
        // weight-row outer loop: each row is streamed once per batch
        for o in 0..self.output {
            let wo = &w[o * self.input..(o + 1) * self.input];
            for r in 0..batch {
                y[r * self.output + o] = dot(wo, &x[r * self.input..(r + 1) * self.input]) + b[o];
            }
        }
        Ok(y)
    }

    /// Accumulates parameter gradients and returns `dL/dx`.
    pub fn backward<T: Scalar>(&self, ps: &mut ParamSet<T>, x: &[T], dy: &[T], batch: usize) -> Vec<T> {
        debug_assert_eq!(dy.len(), batch * self.output);
        let mut dx = vec![T::zero(); batch * self.input];
        let (w, gw) = ps.value_and_grad_mut(self.w);
        for o in 0..self.output {
            let wo = &w[o * self.input..(o + 1) * self.input];
            let go = &mut gw[o * self.input..(o + 1) * self.input];
            for r in 0..batch {
                let g = dy[r * self.output + o];
                if g != T::zero() {
                    axpy(&mut dx[r * self.input..(r + 1) * self.input], g, wo);
                    axpy(go, g, &x[r * self.input..(r + 1) * self.input]);
                }
            }
        }
        let gb = ps.grad_mut(self.b);
        for r in 0..batch {
            for o in 0..self.output {
                gb[o] = gb[o] + dy[r * self.output + o];
            }
        }
        dx
    }
}
