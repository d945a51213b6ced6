//! Max-Feature-Map: elementwise maximum of the two channel halves.

use super::Tensor;
use crate::error::{Error, Result};

/// `out[n, c] = max(in[n, c], in[n, c + C])` for an input with `2C` channels.
/// Works on `[N, 2C, H, W]` and `[N, 2C]` tensors. The returned mask marks
/// elements where the second half won; ties go to the first half.
pub fn mfm(input: &Tensor) -> Result<(Tensor, Vec<bool>)> {
    let shape = input.shape();
    if shape.len() < 2 {
        return Err(Error::Shape(format!(
            "MFM needs a channel axis, got {shape:?}"
        )));
    }
    let (n, channels) = (shape[0], shape[1]);
    if channels % 2 != 0 {
        return Err(Error::Shape(format!(
            "MFM needs an even channel count, got {channels}"
        )));
    }
    let half = channels / 2;
    let spatial: usize = shape[2..].iter().product();
    let x = input.values();
    let mut out = Vec::with_capacity(x.len() / 2);
    let mut second = Vec::with_capacity(x.len() / 2);
    for ni in 0..n {
        let base = ni * channels * spatial;
        let (a, b) = x[base..base + channels * spatial].split_at(half * spatial);
        for (&p, &q) in a.iter().zip(b) {
            let take_second = q > p;
            out.push(if take_second { q } else { p });
            second.push(take_second);
        }
    }
    let mut out_shape = shape.to_vec();
    out_shape[1] = half;
    Ok((Tensor::new(out_shape, out)?, second))
}

/// Routes each output gradient to the winning half.
pub fn mfm_backward(grad_out: &Tensor, second: &[bool]) -> Result<Tensor> {
    if grad_out.len() != second.len() {
        return Err(Error::Shape("MFM gradient does not match mask".into()));
    }
    let shape = grad_out.shape();
    let (n, half) = (shape[0], shape[1]);
    let spatial: usize = shape[2..].iter().product();
    let mut gx = vec![0.0; 2 * grad_out.len()];
    let g = grad_out.values();
    for ni in 0..n {
        for j in 0..half * spatial {
            let src = ni * half * spatial + j;
            let dst = ni * 2 * half * spatial + j + if second[src] { half * spatial } else { 0 };
            gx[dst] = g[src];
        }
    }
    let mut in_shape = shape.to_vec();
    in_shape[1] = 2 * half;
    Tensor::new(in_shape, gx)
}

/// Layer wrapper caching the routing mask.
#[derive(Debug, Clone, Default)]
pub struct Mfm {
    mask: Vec<bool>,
}

impl Mfm {
    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let (out, mask) = mfm(input)?;
        self.mask = mask;
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        mfm_backward(grad_out, &self.mask)
    }
}
