use rand::Rng;

use super::{Mode, Tensor};
use crate::error::{Error, Result};

/// Inverted dropout: in train mode each element is zeroed with probability
/// `drop_prob` and survivors are scaled by `1 / (1 - drop_prob)`; eval mode
/// is the identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    drop_prob: f64,
    mask: Option<Vec<f64>>,
}

impl Dropout {
    pub fn new(drop_prob: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&drop_prob) {
            return Err(Error::Config(format!(
                "drop probability must lie in [0, 1), got {drop_prob}"
            )));
        }
        Ok(Self {
            drop_prob,
            mask: None,
        })
    }

    pub fn drop_prob(&self) -> f64 {
        self.drop_prob
    }

    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        input: &Tensor,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Tensor> {
        if mode == Mode::Eval || self.drop_prob == 0.0 {
            self.mask = None;
            return Ok(input.clone());
        }
        let keep = 1.0 / (1.0 - self.drop_prob);
        let mask: Vec<f64> = (0..input.len())
            .map(|_| {
                if rng.random::<f64>() < self.drop_prob {
                    0.0
                } else {
                    keep
                }
            })
            .collect();
        let out = input
            .values()
            .iter()
            .zip(&mask)
            .map(|(x, m)| x * m)
            .collect();
        self.mask = Some(mask);
        Tensor::new(input.shape().to_vec(), out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        match &self.mask {
            None => Ok(grad_out.clone()),
            Some(mask) => {
                if mask.len() != grad_out.len() {
                    return Err(Error::Shape("dropout gradient does not match mask".into()));
                }
                let g = grad_out
                    .values()
                    .iter()
                    .zip(mask)
                    .map(|(g, m)| g * m)
                    .collect();
                Tensor::new(grad_out.shape().to_vec(), g)
            }
        }
    }
}
