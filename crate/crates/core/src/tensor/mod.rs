//! Dense n-dimensional `f64` arrays and the layer operations the network is
//! built from.
//!
//! Differentiation is reverse mode at layer granularity: every layer caches
//! what its backward pass needs during `forward`, and `backward` takes the
//! gradient of the loss with respect to the layer output, accumulates
//! parameter gradients into the parameters' `grad` buffers and returns the
//! gradient with respect to the layer input.

pub mod batchnorm;
pub mod checkpoint;
pub mod conv;
pub mod dropout;
pub mod gradcheck;
pub mod init;
pub mod linear;
pub mod mfm;
pub mod pool;

use crate::error::{Error, Result};

pub use batchnorm::BatchNorm;
pub use conv::Conv2d;
pub use dropout::Dropout;
pub use gradcheck::{gradient_check, gradient_check_with, relative_error, Stencil};
pub use init::kaiming_normal_init;
pub use linear::Linear;
pub use mfm::{mfm, mfm_backward, Mfm};
pub use pool::MaxPool2d;

/// Train mode uses batch statistics and active dropout; eval mode uses running
/// statistics and no dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Row-major `f64` array with an optional gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    grad: Option<Vec<f64>>,
    requires_grad: bool,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!("zero-sized dimension in {shape:?}")));
        }
        if len != values.len() {
            return Err(Error::Shape(format!(
                "{} values for shape {shape:?}",
                values.len()
            )));
        }
        Ok(Self {
            shape,
            values,
            grad: None,
            requires_grad: false,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            values: vec![value; len],
            grad: None,
            requires_grad: false,
        }
    }

    /// A trainable tensor with a zeroed gradient buffer.
    pub fn parameter(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let mut t = Self::new(shape, values)?;
        t.requires_grad = true;
        t.grad = Some(vec![0.0; t.values.len()]);
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    /// Gradient buffer, allocated on first use.
    pub fn grad_mut(&mut self) -> &mut [f64] {
        let len = self.values.len();
        self.grad.get_or_insert_with(|| vec![0.0; len])
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Adds `delta` to the gradient buffer elementwise.
    pub fn accumulate_grad(&mut self, delta: &[f64]) {
        let g = self.grad_mut();
        for (a, d) in g.iter_mut().zip(delta) {
            *a += d;
        }
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        if shape.iter().product::<usize>() != self.values.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `(N, C, H, W)` view of a 4-D tensor.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match self.shape[..] {
            [n, c, h, w] => Ok((n, c, h, w)),
            _ => Err(Error::Shape(format!(
                "expected 4-D tensor, got {:?}",
                self.shape
            ))),
        }
    }

    /// `(N, D)` view of a 2-D tensor.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [n, d] => Ok((n, d)),
            _ => Err(Error::Shape(format!(
                "expected 2-D tensor, got {:?}",
                self.shape
            ))),
        }
    }
}
