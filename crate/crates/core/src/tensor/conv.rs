//! 2-D cross-correlation with zero padding.

use rand::Rng;
use rayon::prelude::*;

use super::init::kaiming_normal_init;
use super::Tensor;
use crate::error::{Error, Result};

/// Output spatial size for a square kernel.
pub fn conv_output_size(input: usize, kernel: usize, stride: usize, padding: usize) -> usize {
    (input + 2 * padding - kernel) / stride + 1
}

fn check_shapes(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<(usize, usize)> {
    let (_, c_in, _, _) = input.dims4()?;
    let (c_out, w_in, kh, kw) = weight.dims4()?;
    if w_in != c_in {
        return Err(Error::Shape(format!(
            "input has {c_in} channels, weight expects {w_in}"
        )));
    }
    if kh != kw {
        return Err(Error::Shape(format!("non-square kernel {kh}x{kw}")));
    }
    if bias.shape() != [c_out] {
        return Err(Error::Shape(format!(
            "bias shape {:?} for {c_out} filters",
            bias.shape()
        )));
    }
    Ok((c_out, kh))
}

/// Accumulates `scale * src[ix]` into `dst[ox]` over the valid range where
/// `ix = ox * stride + offset`.
#[inline]
fn axpy_shifted(dst: &mut [f64], src: &[f64], scale: f64, offset: isize, stride: usize) {
    if stride == 1 {
        let lo = (-offset).max(0) as usize;
        let hi = (src.len() as isize - offset).min(dst.len() as isize);
        if hi <= lo as isize {
            return;
        }
        let hi = hi as usize;
        let s0 = (lo as isize + offset) as usize;
        for (d, s) in dst[lo..hi].iter_mut().zip(&src[s0..s0 + (hi - lo)]) {
            *d += scale * s;
        }
    } else {
        for (ox, d) in dst.iter_mut().enumerate() {
            let ix = (ox * stride) as isize + offset;
            if ix >= 0 && (ix as usize) < src.len() {
                *d += scale * src[ix as usize];
            }
        }
    }
}

/// `out[n, co] = bias[co] + sum_ci weight[co, ci] ⋆ input[n, ci]`.
pub fn conv2d(
    input: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
    stride: usize,
    padding: usize,
) -> Result<Tensor> {
    let (n, c_in, h, w) = input.dims4()?;
    let (c_out, k) = check_shapes(input, weight, bias)?;
    if stride == 0 || h + 2 * padding < k || w + 2 * padding < k {
        return Err(Error::Shape(format!(
            "kernel {k} with stride {stride}, padding {padding} does not fit {h}x{w}"
        )));
    }
    let (oh, ow) = (
        conv_output_size(h, k, stride, padding),
        conv_output_size(w, k, stride, padding),
    );
    let x = input.values();
    let wt = weight.values();
    let b = bias.values();
    let mut out = vec![0.0; n * c_out * oh * ow];
    out.par_chunks_mut(oh * ow)
        .enumerate()
        .for_each(|(idx, plane)| {
            let (ni, co) = (idx / c_out, idx % c_out);
            plane.iter_mut().for_each(|v| *v = b[co]);
            for ci in 0..c_in {
                let src = &x[(ni * c_in + ci) * h * w..][..h * w];
                let kern = &wt[(co * c_in + ci) * k * k..][..k * k];
                for ky in 0..k {
                    for oy in 0..oh {
                        let iy = (oy * stride + ky) as isize - padding as isize;
                        if iy < 0 || iy as usize >= h {
                            continue;
                        }
                        let src_row = &src[iy as usize * w..][..w];
                        let dst_row = &mut plane[oy * ow..][..ow];
                        for kx in 0..k {
                            let wv = kern[ky * k + kx];
                            axpy_shifted(
                                dst_row,
                                src_row,
                                wv,
                                kx as isize - padding as isize,
                                stride,
                            );
                        }
                    }
                }
            }
        });
    Tensor::new(vec![n, c_out, oh, ow], out)
}

/// Gradients of [`conv2d`] with respect to input, weight and bias.
pub fn conv2d_backward(
    input: &Tensor,
    weight: &Tensor,
    grad_out: &Tensor,
    stride: usize,
    padding: usize,
) -> Result<(Tensor, Tensor, Tensor)> {
    let (n, c_in, h, w) = input.dims4()?;
    let (c_out, _, k, _) = weight.dims4()?;
    let (gn, gc, oh, ow) = grad_out.dims4()?;
    if gn != n
        || gc != c_out
        || oh != conv_output_size(h, k, stride, padding)
        || ow != conv_output_size(w, k, stride, padding)
    {
        return Err(Error::Shape(format!(
            "output gradient {:?} does not match convolution output",
            grad_out.shape()
        )));
    }
    let x = input.values();
    let wt = weight.values();
    let g = grad_out.values();

    let grad_b: Vec<f64> = (0..c_out)
        .map(|co| {
            (0..n)
                .map(|ni| {
                    g[(ni * c_out + co) * oh * ow..][..oh * ow]
                        .iter()
                        .sum::<f64>()
                })
                .sum()
        })
        .collect();

    let mut grad_w = vec![0.0; wt.len()];
    grad_w
        .par_chunks_mut(c_in * k * k)
        .enumerate()
        .for_each(|(co, gw)| {
            for ni in 0..n {
                let gplane = &g[(ni * c_out + co) * oh * ow..][..oh * ow];
                for ci in 0..c_in {
                    let src = &x[(ni * c_in + ci) * h * w..][..h * w];
                    for ky in 0..k {
                        for kx in 0..k {
                            let mut acc = 0.0;
                            for oy in 0..oh {
                                let iy = (oy * stride + ky) as isize - padding as isize;
                                if iy < 0 || iy as usize >= h {
                                    continue;
                                }
                                let src_row = &src[iy as usize * w..][..w];
                                let g_row = &gplane[oy * ow..][..ow];
                                acc += dot_shifted(
                                    g_row,
                                    src_row,
                                    kx as isize - padding as isize,
                                    stride,
                                );
                            }
                            gw[(ci * k + ky) * k + kx] += acc;
                        }
                    }
                }
            }
        });

    let mut grad_x = vec![0.0; x.len()];
    grad_x
        .par_chunks_mut(h * w)
        .enumerate()
        .for_each(|(idx, gx)| {
            let (ni, ci) = (idx / c_in, idx % c_in);
            for co in 0..c_out {
                let gplane = &g[(ni * c_out + co) * oh * ow..][..oh * ow];
                let kern = &wt[(co * c_in + ci) * k * k..][..k * k];
                for ky in 0..k {
                    for oy in 0..oh {
                        let iy = (oy * stride + ky) as isize - padding as isize;
                        if iy < 0 || iy as usize >= h {
                            continue;
                        }
                        let g_row = &gplane[oy * ow..][..ow];
                        let dst_row = &mut gx[iy as usize * w..][..w];
                        for kx in 0..k {
                            scatter_shifted(
                                dst_row,
                                g_row,
                                kern[ky * k + kx],
                                kx as isize - padding as isize,
                                stride,
                            );
                        }
                    }
                }
            }
        });

    Ok((
        Tensor::new(input.shape().to_vec(), grad_x)?,
        Tensor::new(weight.shape().to_vec(), grad_w)?,
        Tensor::new(vec![c_out], grad_b)?,
    ))
}

/// `sum_ox g[ox] * src[ox * stride + offset]` over the valid range.
#[inline]
fn dot_shifted(g: &[f64], src: &[f64], offset: isize, stride: usize) -> f64 {
    let mut acc = 0.0;
    if stride == 1 {
        let lo = (-offset).max(0) as usize;
        let hi = (src.len() as isize - offset).min(g.len() as isize);
        if hi > lo as isize {
            let s0 = (lo as isize + offset) as usize;
            for (a, b) in g[lo..hi as usize].iter().zip(&src[s0..]) {
                acc += a * b;
            }
        }
    } else {
        for (ox, a) in g.iter().enumerate() {
            let ix = (ox * stride) as isize + offset;
            if ix >= 0 && (ix as usize) < src.len() {
                acc += a * src[ix as usize];
            }
        }
    }
    acc
}

/// `dst[ox * stride + offset] += scale * g[ox]` over the valid range.
#[inline]
fn scatter_shifted(dst: &mut [f64], g: &[f64], scale: f64, offset: isize, stride: usize) {
    for (ox, a) in g.iter().enumerate() {
        let ix = (ox * stride) as isize + offset;
        if ix >= 0 && (ix as usize) < dst.len() {
            dst[ix as usize] += scale * a;
        }
    }
}

/// Square-kernel convolution layer with "same" zero padding.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub weight: Tensor,
    pub bias: Tensor,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    cache: Option<Tensor>,
}

impl Conv2d {
    /// Kaiming-normal weights (fan-in `c_in * k * k`), zero bias.
    pub fn new<R: Rng + ?Sized>(
        c_in: usize,
        c_out: usize,
        kernel: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if kernel % 2 == 0 {
            return Err(Error::Config(format!(
                "same padding needs an odd kernel, got {kernel}"
            )));
        }
        let fan_in = c_in * kernel * kernel;
        let w = kaiming_normal_init(&[c_out, c_in, kernel, kernel], fan_in, rng)?;
        Self::from_params(w.into_values(), vec![0.0; c_out], c_in, c_out, kernel)
    }

    pub fn from_params(
        weight: Vec<f64>,
        bias: Vec<f64>,
        c_in: usize,
        c_out: usize,
        kernel: usize,
    ) -> Result<Self> {
        Ok(Self {
            weight: Tensor::parameter(vec![c_out, c_in, kernel, kernel], weight)?,
            bias: Tensor::parameter(vec![c_out], bias)?,
            kernel,
            stride: 1,
            padding: kernel / 2,
            cache: None,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let out = conv2d(input, &self.weight, &self.bias, self.stride, self.padding)?;
        self.cache = Some(input.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let input = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("conv backward before forward".into()))?;
        let (gx, gw, gb) =
            conv2d_backward(input, &self.weight, grad_out, self.stride, self.padding)?;
        self.weight.accumulate_grad(gw.values());
        self.bias.accumulate_grad(gb.values());
        Ok(gx)
    }
}
