//! Small dense-layer engine with hand-written backward passes.
//!
//! Everything is generic over [`Scalar`] so the same layers run in 32-bit for
//! training and in 64-bit for finite-difference gradient checks.

mod conv;
mod gradcheck;
mod layers;
mod linear;
mod loss;
mod lstm;
mod params;

use std::fmt::{Debug, Display};

use thiserror::Error;

pub use conv::Conv1d;
pub use gradcheck::{grad_check, grad_check_against, GradCheckOptions, GradCheckReport, Stencil};
pub use layers::{BatchNorm1d, BatchNormCache, DropoutStream, relu_backward, relu_forward, dropout_forward, dropout_backward};
pub use linear::Linear;
pub use loss::{one_hot, softmax, softmax_cross_entropy};
pub use lstm::{Lstm, LstmCache, LstmGrads};
pub use params::{adam_step, Param, ParamId, ParamSet, TrainConfig, WeightDecayMode};

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("kernel of size {kernel} longer than input of length {len}")]
    KernelTooLarge { kernel: usize, len: usize },
    #[error("batch normalization needs at least 2 samples in training mode, got {0}")]
    BatchTooSmall(usize),
    #[error("row {0} is not a valid one-hot label")]
    InvalidOneHot(usize),
    #[error("two identical forward passes disagree ({0} vs {1})")]
    NonDeterministicModel(f64, f64),
    #[error("non-finite value detected: {0}")]
    NumericFailure(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub trait Scalar: num_traits::Float + std::iter::Sum + Send + Sync + Default + Debug + Display + 'static {
    fn of(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn of(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn of(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Dense row-major array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self { shape: shape.to_vec(), data: vec![T::zero(); shape.iter().product()] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self, NeuralError> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(NeuralError::ShapeMismatch(format!("{} values for shape {shape:?}", data.len())));
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|v| U::of(v.as_f64())).collect() }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Eight-lane dot product; the fixed lane split keeps results reproducible
/// and lets the compiler vectorize.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] = acc[l] + x[l] * y[l];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s = s + *x * *y;
    }
    s
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy<T: Scalar>(y: &mut [T], alpha: T, x: &[T]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * *xi;
    }
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Debug-build guard against NaN/inf propagation.
#[inline]
pub(crate) fn debug_check_finite<T: Scalar>(what: &str, v: &[T]) {
    if cfg!(debug_assertions) {
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            panic!("{what}: non-finite value at {i}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive() {
        for n in [0usize, 1, 7, 8, 9, 31, 100] {
            let a: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
            let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            assert!((dot(&a, &b) - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_shape_checked() {
        assert!(Tensor::<f32>::from_vec(&[2, 3], vec![0.0; 5]).is_err());
        let t = Tensor::<f32>::from_vec(&[2, 3], vec![1.5; 6]).unwrap();
        assert_eq!(t.cast::<f64>().data()[5], 1.5);
    }
}
