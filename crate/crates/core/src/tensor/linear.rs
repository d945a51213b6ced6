use rand::Rng;

use super::init::kaiming_normal_init;
use super::Tensor;
use crate::error::{Error, Result};

/// Fully connected layer `y = x Wᵀ + b` with `W` of shape `[K, D]`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
    cache: Option<Tensor>,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Result<Self> {
        let w = kaiming_normal_init(&[out_dim, in_dim], in_dim, rng)?;
        Self::from_params(w.into_values(), vec![0.0; out_dim], in_dim, out_dim)
    }

    pub fn from_params(
        weight: Vec<f64>,
        bias: Vec<f64>,
        in_dim: usize,
        out_dim: usize,
    ) -> Result<Self> {
        Ok(Self {
            weight: Tensor::parameter(vec![out_dim, in_dim], weight)?,
            bias: Tensor::parameter(vec![out_dim], bias)?,
            cache: None,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let (n, d) = input.dims2()?;
        if d != self.in_dim() {
            return Err(Error::Shape(format!(
                "linear layer expects {} inputs, got {d}",
                self.in_dim()
            )));
        }
        let k = self.out_dim();
        let w = self.weight.values();
        let b = self.bias.values();
        let x = input.values();
        let mut out = Vec::with_capacity(n * k);
        for row in x.chunks_exact(d) {
            for (j, wrow) in w.chunks_exact(d).enumerate() {
                out.push(b[j] + row.iter().zip(wrow).map(|(a, c)| a * c).sum::<f64>());
            }
        }
        self.cache = Some(input.clone());
        Tensor::new(vec![n, k], out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let input = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("linear backward before forward".into()))?;
        let (n, d) = input.dims2()?;
        let k = self.out_dim();
        if grad_out.shape() != [n, k] {
            return Err(Error::Shape("linear gradient shape mismatch".into()));
        }
        let g = grad_out.values();
        let x = input.values();
        let w = self.weight.values();
        let mut gw = vec![0.0; k * d];
        let mut gb = vec![0.0; k];
        let mut gx = vec![0.0; n * d];
        for i in 0..n {
            let xrow = &x[i * d..(i + 1) * d];
            let gxrow = &mut gx[i * d..(i + 1) * d];
            for j in 0..k {
                let gij = g[i * k + j];
                gb[j] += gij;
                let wrow = &w[j * d..(j + 1) * d];
                let gwrow = &mut gw[j * d..(j + 1) * d];
                for t in 0..d {
                    gwrow[t] += gij * xrow[t];
                    gxrow[t] += gij * wrow[t];
                }
            }
        }
        self.weight.accumulate_grad(&gw);
        self.bias.accumulate_grad(&gb);
        Tensor::new(vec![n, d], gx)
    }
}
