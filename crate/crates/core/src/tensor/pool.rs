use super::Tensor;
use crate::error::{Error, Result};

/// 2×2 max pooling with stride 2; odd trailing rows/columns are dropped.
/// Gradients route to the first maximum in row-major window order.
#[derive(Debug, Clone, Default)]
pub struct MaxPool2d {
    argmax: Vec<usize>,
    input_shape: Vec<usize>,
}

impl MaxPool2d {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let (n, c, h, w) = input.dims4()?;
        if h < 2 || w < 2 {
            return Err(Error::Shape(format!("cannot 2x2-pool a {h}x{w} map")));
        }
        let (oh, ow) = (h / 2, w / 2);
        let x = input.values();
        let mut out = Vec::with_capacity(n * c * oh * ow);
        let mut argmax = Vec::with_capacity(n * c * oh * ow);
        for plane in 0..n * c {
            let base = plane * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = base + 2 * oy * w + 2 * ox;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = base + (2 * oy + dy) * w + 2 * ox + dx;
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                    out.push(x[best]);
                    argmax.push(best);
                }
            }
        }
        self.argmax = argmax;
        self.input_shape = input.shape().to_vec();
        Tensor::new(vec![n, c, oh, ow], out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        if grad_out.len() != self.argmax.len() {
            return Err(Error::Shape(
                "pool gradient does not match last forward".into(),
            ));
        }
        let mut gx = Tensor::zeros(&self.input_shape).into_values();
        for (&idx, &g) in self.argmax.iter().zip(grad_out.values()) {
            gx[idx] += g;
        }
        Tensor::new(self.input_shape.clone(), gx)
    }
}
