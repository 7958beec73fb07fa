use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NeuralError, Scalar, Tensor};
use crate::model::NamedTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

#[derive(Debug, Clone)]
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    /// Buffers such as running statistics are stored and checkpointed but
    /// never touched by the optimizer or the gradient check.
    pub trainable: bool,
    m: Vec<T>,
    v: Vec<T>,
}

/// Named trainable tensors with co-indexed gradients and Adam state.
#[derive(Debug, Clone)]
pub struct ParamSet<T> {
    params: Vec<Param<T>>,
    step: u64,
}

impl<T: Scalar> Default for ParamSet<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        Self { params: Vec::new(), step: 0 }
    }

    /// Panics on a duplicate name.
    pub fn add(&mut self, name: &str, value: Tensor<T>) -> ParamId {
        self.push(name, value, true)
    }

    pub fn add_buffer(&mut self, name: &str, shape: &[usize], v: f64) -> ParamId {
        let mut t = Tensor::zeros(shape);
        t.fill(T::of(v));
        self.push(name, t, false)
    }

    fn push(&mut self, name: &str, value: Tensor<T>, trainable: bool) -> ParamId {
        assert!(self.find(name).is_none(), "duplicate parameter {name}");
        let n = value.len();
        let grad = Tensor::zeros(value.shape());
        self.params.push(Param { name: name.to_string(), value, grad, trainable, m: vec![T::zero(); n], v: vec![T::zero(); n] });
        ParamId(self.params.len() - 1)
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.params[id.0].trainable
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    /// Uniform in `[-bound, bound]`.
    pub fn add_uniform(&mut self, name: &str, shape: &[usize], bound: f64, rng: &mut impl Rng) -> ParamId {
        let n = shape.iter().product();
        let data = (0..n).map(|_| T::of(rng.random_range(-bound..=bound))).collect();
        self.add(name, Tensor::from_vec(shape, data).expect("shape"))
    }

    pub fn add_const(&mut self, name: &str, shape: &[usize], v: f64) -> ParamId {
        let mut t = Tensor::zeros(shape);
        t.fill(T::of(v));
        self.add(name, t)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn value(&self, id: ParamId) -> &[T] {
        self.params[id.0].value.data()
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut [T] {
        self.params[id.0].value.data_mut()
    }

    pub fn grad(&self, id: ParamId) -> &[T] {
        self.params[id.0].grad.data()
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut [T] {
        self.params[id.0].grad.data_mut()
    }

    /// Borrow a value immutably and its gradient mutably at the same time.
    pub fn value_and_grad_mut(&mut self, id: ParamId) -> (&[T], &mut [T]) {
        let p = &mut self.params[id.0];
        (p.value.data(), p.grad.data_mut())
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(T::zero());
        }
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        &mut self.params
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn num_trainable(&self) -> usize {
        self.params.iter().filter(|p| p.trainable).map(|p| p.value.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.all_finite())
    }

    /// Same names and values in another precision; gradients and optimizer
    /// state start at zero.
    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        let mut out = ParamSet::new();
        for p in &self.params {
            out.push(&p.name, p.value.cast(), p.trainable);
        }
        out
    }

    pub fn to_named_tensors(&self) -> Vec<NamedTensor> {
        self.params.iter().map(|p| NamedTensor::new(p.name.clone(), p.value.shape().to_vec(), p.value.data().iter().map(|v| v.as_f64() as f32).collect())).collect()
    }

    /// Overwrites every parameter from same-named tensors; shapes must match.
    pub fn load_named_tensors(&mut self, tensors: &[NamedTensor]) -> Result<(), NeuralError> {
        for p in &mut self.params {
            let t = tensors.iter().find(|t| t.name == p.name).ok_or_else(|| NeuralError::ShapeMismatch(format!("missing tensor {}", p.name)))?;
            if t.shape != p.value.shape() {
                return Err(NeuralError::ShapeMismatch(format!("tensor {} has shape {:?}, model expects {:?}", p.name, t.shape, p.value.shape())));
            }
            for (dst, src) in p.value.data_mut().iter_mut().zip(&t.data) {
                *dst = T::of(*src as f64);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightDecayMode {
    /// `theta *= 1 - lr * wd` before the Adam update.
    Decoupled,
    /// `grad += wd * theta` before the moment updates.
    CoupledL2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub weight_decay_mode: WeightDecayMode,
    pub dropout_p: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            weight_decay: 0.03,
            weight_decay_mode: WeightDecayMode::Decoupled,
            dropout_p: 0.5,
            epochs: 800,
            batch_size: 32,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(NeuralError::InvalidConfig(format!("dropout_p {} outside [0, 1)", self.dropout_p)));
        }
        if self.batch_size == 0 {
            return Err(NeuralError::InvalidConfig("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || self.weight_decay < 0.0 {
            return Err(NeuralError::InvalidConfig("learning_rate must be positive and weight_decay non-negative".into()));
        }
        Ok(())
    }
}

/// One Adam update of every parameter from its accumulated gradient.
pub fn adam_step<T: Scalar>(ps: &mut ParamSet<T>, cfg: &TrainConfig) {
    ps.step += 1;
    let t = ps.step as i32;
    let lr = cfg.learning_rate;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let bc1 = T::of(1.0 - b1.powi(t));
    let bc2 = T::of(1.0 - b2.powi(t));
    let decay = T::of(1.0 - lr * cfg.weight_decay);
    let wd = T::of(cfg.weight_decay);
    let (b1, b2, lr, eps) = (T::of(b1), T::of(b2), T::of(lr), T::of(cfg.adam_eps));
    let one = T::one();
    for p in ps.params.iter_mut().filter(|p| p.trainable) {
        let grads = p.grad.data();
        let values = p.value.data_mut();
        for i in 0..values.len() {
            let mut g = grads[i];
            match cfg.weight_decay_mode {
                WeightDecayMode::Decoupled => values[i] = values[i] * decay,
                WeightDecayMode::CoupledL2 => g = g + wd * values[i],
            }
            p.m[i] = b1 * p.m[i] + (one - b1) * g;
            p.v[i] = b2 * p.v[i] + (one - b2) * g * g;
            let m_hat = p.m[i] / bc1;
            let v_hat = p.v[i] / bc2;
            values[i] = values[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
