//! Dense tensors, trainable parameters, and activation functions.

use std::fmt;

use num_traits::Float;
use rand::rngs::StdRng;
use rand::Rng;

use crate::error::{Error, Result};

/// Element type of all tensors: `f32` for training runs, `f64` for
/// verification runs (gradient checks, optimizer references).
///
/// Random values are always drawn as `f64` and narrowed, so both precisions
/// consume the same generator stream.
pub trait Scalar: Float + fmt::Debug + fmt::Display + Default + Send + Sync + 'static {
    const BITS: u32;

    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
    fn from_f32(v: f32) -> Self;
    fn as_f32(self) -> f32;
}

impl Scalar for f32 {
    const BITS: u32 = 32;

    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn from_f32(v: f32) -> Self {
        v
    }
    fn as_f32(self) -> f32 {
        self
    }
}

impl Scalar for f64 {
    const BITS: u32 = 64;

    fn from_f64(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
    fn from_f32(v: f32) -> Self {
        v as f64
    }
    fn as_f32(self) -> f32 {
        self as f32
    }
}

/// A dense row-major numeric array.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<S> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> DenseTensor<S> {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        DenseTensor {
            shape: shape.to_vec(),
            data: vec![S::zero(); n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<S>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch {
                op: "from_vec",
                details: format!("shape {:?} expects {} values, got {}", shape, expected, data.len()),
            });
        }
        Ok(DenseTensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    /// Row `i` of a 2-D tensor.
    pub fn row(&self, i: usize) -> &[S] {
        debug_assert_eq!(self.shape.len(), 2);
        let cols = self.shape[1];
        &self.data[i * cols..(i + 1) * cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        debug_assert_eq!(self.shape.len(), 2);
        let cols = self.shape[1];
        &mut self.data[i * cols..(i + 1) * cols]
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(S::zero());
    }

    /// Draws every element uniformly from `[lo, hi)`.
    pub fn fill_uniform(&mut self, lo: f64, hi: f64, rng: &mut StdRng) {
        for v in &mut self.data {
            *v = S::from_f64(rng.gen_range(lo..hi));
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Exact bit equality, the comparison used by freeze-soundness checks.
    pub fn bits_eq(&self, other: &Self) -> bool {
        self.shape == other.shape
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.as_f64().to_bits() == b.as_f64().to_bits())
    }
}

/// A trainable parameter: value plus gradient and Adadelta accumulators,
/// all sharing one shape.
///
/// When `trainable` is false the value never changes across training steps
/// and no gradient is accumulated into it.
#[derive(Debug, Clone)]
pub struct ParamTensor<S> {
    pub name: String,
    pub value: DenseTensor<S>,
    pub grad: DenseTensor<S>,
    pub acc_grad_sq: DenseTensor<S>,
    pub acc_update_sq: DenseTensor<S>,
    pub trainable: bool,
}

impl<S: Scalar> ParamTensor<S> {
    pub fn new(name: impl Into<String>, value: DenseTensor<S>, trainable: bool) -> Self {
        let shape = value.shape().to_vec();
        ParamTensor {
            name: name.into(),
            grad: DenseTensor::zeros(&shape),
            acc_grad_sq: DenseTensor::zeros(&shape),
            acc_update_sq: DenseTensor::zeros(&shape),
            value,
            trainable,
        }
    }

    pub fn zeros(name: impl Into<String>, shape: &[usize], trainable: bool) -> Self {
        ParamTensor::new(name, DenseTensor::zeros(shape), trainable)
    }

    pub fn shape(&self) -> &[usize] {
        self.value.shape()
    }

    pub fn clear_grad(&mut self) {
        self.grad.fill_zero();
    }
}

/// Activation functions used on the C- and H-layer outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationKind {
    /// Identity: output equals input.
    Iden,
    /// Hyperbolic tangent, bounded in (-1, 1).
    Tanh,
    /// Rectified linear unit, max(0, x).
    ReLU,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 3] = [ActivationKind::Iden, ActivationKind::Tanh, ActivationKind::ReLU];

    pub fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            ActivationKind::Iden => x,
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::ReLU => {
                if x > S::zero() {
                    x
                } else {
                    S::zero()
                }
            }
        }
    }

    /// Derivative with respect to the pre-activation input.
    pub fn derivative<S: Scalar>(self, pre: S) -> S {
        match self {
            ActivationKind::Iden => S::one(),
            ActivationKind::Tanh => {
                let t = pre.tanh();
                S::one() - t * t
            }
            ActivationKind::ReLU => {
                if pre > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ActivationKind::Iden => "Iden",
            ActivationKind::Tanh => "Tanh",
            ActivationKind::ReLU => "ReLU",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iden" | "identity" => Ok(ActivationKind::Iden),
            "tanh" => Ok(ActivationKind::Tanh),
            "relu" => Ok(ActivationKind::ReLU),
            other => Err(Error::InvalidConfig(format!(
                "unknown activation `{other}` (expected Iden, Tanh, or ReLU)"
            ))),
        }
    }
}
