//! Per-channel batch normalization for `[N, C, H, W]` maps and `[N, C]`
//! vectors.

use super::{Mode, Tensor};
use crate::error::{Error, Result};

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub eps: f64,
    pub momentum: f64,
    cache: Option<Cache>,
}

#[derive(Debug, Clone)]
struct Cache {
    normalized: Vec<f64>,
    inv_std: Vec<f64>,
    shape: Vec<usize>,
    mode: Mode,
}

fn layout(shape: &[usize]) -> Result<(usize, usize, usize)> {
    match shape {
        [n, c] => Ok((*n, *c, 1)),
        [n, c, h, w] => Ok((*n, *c, h * w)),
        _ => Err(Error::Shape(format!(
            "batch norm expects 2-D or 4-D input, got {shape:?}"
        ))),
    }
}

impl BatchNorm {
    /// γ = 1, β = 0, running statistics (0, 1).
    pub fn new(channels: usize) -> Result<Self> {
        Ok(Self {
            gamma: Tensor::parameter(vec![channels], vec![1.0; channels])?,
            beta: Tensor::parameter(vec![channels], vec![0.0; channels])?,
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], 1.0),
            eps: BN_EPSILON,
            momentum: BN_MOMENTUM,
            cache: None,
        })
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn param_count(&self) -> usize {
        self.gamma.len() + self.beta.len()
    }

    pub fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<Tensor> {
        let (n, c, spatial) = layout(input.shape())?;
        if c != self.channels() {
            return Err(Error::Shape(format!(
                "batch norm over {} channels got {c}",
                self.channels()
            )));
        }
        let count = n * spatial;
        if mode == Mode::Train && count < 2 {
            return Err(Error::InvalidInput(
                "batch statistics need at least two values per channel".into(),
            ));
        }
        let x = input.values();
        let index = |ni: usize, ch: usize| (ni * c + ch) * spatial;
        let (mean, var): (Vec<f64>, Vec<f64>) = match mode {
            Mode::Train => (0..c)
                .map(|ch| {
                    let vals =
                        || (0..n).flat_map(move |ni| &x[index(ni, ch)..index(ni, ch) + spatial]);
                    let mean = vals().sum::<f64>() / count as f64;
                    let var = vals().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
                    (mean, var)
                })
                .unzip(),
            Mode::Eval => (
                self.running_mean.values().to_vec(),
                self.running_var.values().to_vec(),
            ),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let gamma = self.gamma.values();
        let beta = self.beta.values();
        let mut normalized = vec![0.0; x.len()];
        let mut out = vec![0.0; x.len()];
        for ni in 0..n {
            for ch in 0..c {
                let start = index(ni, ch);
                for i in start..start + spatial {
                    let xh = (x[i] - mean[ch]) * inv_std[ch];
                    normalized[i] = xh;
                    out[i] = gamma[ch] * xh + beta[ch];
                }
            }
        }
        if mode == Mode::Train {
            let m = self.momentum;
            let unbiased = count as f64 / (count - 1) as f64;
            for (rm, &bm) in self.running_mean.values_mut().iter_mut().zip(&mean) {
                *rm = (1.0 - m) * *rm + m * bm;
            }
            for (rv, &bv) in self.running_var.values_mut().iter_mut().zip(&var) {
                *rv = (1.0 - m) * *rv + m * bv * unbiased;
            }
        }
        self.cache = Some(Cache {
            normalized,
            inv_std,
            shape: input.shape().to_vec(),
            mode,
        });
        Tensor::new(input.shape().to_vec(), out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("batch norm backward before forward".into()))?;
        if grad_out.shape() != cache.shape.as_slice() {
            return Err(Error::Shape("batch norm gradient shape mismatch".into()));
        }
        let (n, c, spatial) = layout(&cache.shape)?;
        let g = grad_out.values();
        let xh = &cache.normalized;
        let gamma = self.gamma.values().to_vec();
        let index = |ni: usize, ch: usize| (ni * c + ch) * spatial;
        let mut d_gamma = vec![0.0; c];
        let mut d_beta = vec![0.0; c];
        for ni in 0..n {
            for ch in 0..c {
                let start = index(ni, ch);
                for i in start..start + spatial {
                    d_gamma[ch] += g[i] * xh[i];
                    d_beta[ch] += g[i];
                }
            }
        }
        let count = (n * spatial) as f64;
        let mut gx = vec![0.0; g.len()];
        for ni in 0..n {
            for ch in 0..c {
                let scale = gamma[ch] * cache.inv_std[ch];
                let start = index(ni, ch);
                for i in start..start + spatial {
                    gx[i] = match cache.mode {
                        Mode::Train => {
                            scale * (g[i] - d_beta[ch] / count - xh[i] * d_gamma[ch] / count)
                        }
                        Mode::Eval => scale * g[i],
                    };
                }
            }
        }
        self.gamma.accumulate_grad(&d_gamma);
        self.beta.accumulate_grad(&d_beta);
        Tensor::new(cache.shape.clone(), gx)
    }
}
