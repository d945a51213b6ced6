use rand::Rng;

use super::spec::{LayerDesc, NetworkSpec};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::tensor::{BatchNorm, Conv2d, Dropout, Linear, MaxPool2d, Mfm, Mode, Tensor};

#[derive(Debug, Clone)]
pub enum Layer {
    Conv(Conv2d),
    Mfm(Mfm),
    Pool(MaxPool2d),
    BatchNorm(BatchNorm),
    Dropout(Dropout),
    Flatten { input_shape: Vec<usize> },
    Fc(Linear),
}

/// Instantiated network: layers in the order of [`NetworkSpec::layers`].
#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<Layer>,
}

impl Network {
    /// Builds every layer with Kaiming-normal weights and zero biases.
    pub fn build<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self> {
        let shapes = spec.layer_shapes()?;
        let mut prev = vec![1, spec.input_bins, spec.input_frames];
        let mut layers = Vec::with_capacity(spec.layers.len());
        for (desc, (_, shape)) in spec.layers.iter().zip(&shapes) {
            layers.push(match desc {
                LayerDesc::Conv {
                    kernel, channels, ..
                } => Layer::Conv(Conv2d::new(prev[0], *channels, *kernel, rng)?),
                LayerDesc::Mfm { .. } => Layer::Mfm(Mfm::default()),
                LayerDesc::MaxPool { .. } => Layer::Pool(MaxPool2d::new()),
                LayerDesc::BatchNorm { .. } => Layer::BatchNorm(BatchNorm::new(prev[0])?),
                LayerDesc::Dropout { prob } => Layer::Dropout(Dropout::new(*prob)?),
                LayerDesc::Flatten => Layer::Flatten {
                    input_shape: Vec::new(),
                },
                LayerDesc::Fc { units, .. } => Layer::Fc(Linear::new(prev[0], *units, rng)?),
            });
            prev = shape.clone();
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn embedding_dim(&self) -> usize {
        self.spec.embedding_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Conv(c) => c.param_count(),
                Layer::BatchNorm(b) => b.param_count(),
                Layer::Fc(f) => f.param_count(),
                _ => 0,
            })
            .sum()
    }

    /// `[N, 1, bins, frames]` input to `[N, D]` embeddings.
    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        input: &Tensor,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Tensor> {
        let (_, c, h, w) = input.dims4()?;
        if (c, h, w) != (1, self.spec.input_bins, self.spec.input_frames) {
            return Err(Error::Shape(format!(
                "network expects 1x{}x{} inputs, got {c}x{h}x{w}",
                self.spec.input_bins, self.spec.input_frames
            )));
        }
        let mut x = input.clone();
        for layer in &mut self.layers {
            x = match layer {
                Layer::Conv(l) => l.forward(&x)?,
                Layer::Mfm(l) => l.forward(&x)?,
                Layer::Pool(l) => l.forward(&x)?,
                Layer::BatchNorm(l) => l.forward(&x, mode)?,
                Layer::Dropout(l) => l.forward(&x, mode, rng)?,
                Layer::Flatten { input_shape } => {
                    *input_shape = x.shape().to_vec();
                    let n = input_shape[0];
                    let d = x.len() / n.max(1);
                    x.reshape(vec![n, d])?
                }
                Layer::Fc(l) => l.forward(&x)?,
            };
        }
        Ok(x)
    }

    /// Eval-mode forward; dropout is inactive so no randomness is consumed.
    pub fn embed(&mut self, input: &Tensor) -> Result<Tensor> {
        self.forward(input, Mode::Eval, &mut NoRng)
    }

    /// Backpropagates `d loss / d embedding` through the cached forward pass,
    /// accumulating parameter gradients.
    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let mut g = grad_out.clone();
        for layer in self.layers.iter_mut().rev() {
            g = match layer {
                Layer::Conv(l) => l.backward(&g)?,
                Layer::Mfm(l) => l.backward(&g)?,
                Layer::Pool(l) => l.backward(&g)?,
                Layer::BatchNorm(l) => l.backward(&g)?,
                Layer::Dropout(l) => l.backward(&g)?,
                Layer::Flatten { input_shape } => g.reshape(input_shape.clone())?,
                Layer::Fc(l) => l.backward(&g)?,
            };
        }
        Ok(g)
    }

    /// Trainable tensors in a fixed order.
    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(l) => {
                    out.push(&mut l.weight);
                    out.push(&mut l.bias);
                }
                Layer::BatchNorm(l) => {
                    out.push(&mut l.gamma);
                    out.push(&mut l.beta);
                }
                Layer::Fc(l) => {
                    out.push(&mut l.weight);
                    out.push(&mut l.bias);
                }
                _ => {}
            }
        }
        out
    }

    /// Every persistent tensor (parameters and batch-norm running
    /// statistics) with a stable name, for checkpointing.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (desc, layer) in self.spec.layers.iter().zip(&self.layers) {
            let name = desc.name();
            match layer {
                Layer::Conv(l) => {
                    out.push((format!("{name}.weight"), &l.weight));
                    out.push((format!("{name}.bias"), &l.bias));
                }
                Layer::BatchNorm(l) => {
                    out.push((format!("{name}.gamma"), &l.gamma));
                    out.push((format!("{name}.beta"), &l.beta));
                    out.push((format!("{name}.running_mean"), &l.running_mean));
                    out.push((format!("{name}.running_var"), &l.running_var));
                }
                Layer::Fc(l) => {
                    out.push((format!("{name}.weight"), &l.weight));
                    out.push((format!("{name}.bias"), &l.bias));
                }
                _ => {}
            }
        }
        out
    }

    /// Overwrites the value of every named tensor; shapes must match.
    pub fn load_named<'a>(
        &mut self,
        mut lookup: impl FnMut(&str) -> Result<&'a Tensor>,
    ) -> Result<()> {
        let names: Vec<&str> = self
            .spec
            .layers
            .iter()
            .map(|d| d.name())
            .collect::<Vec<_>>();
        let names: Vec<String> = names.into_iter().map(String::from).collect();
        for (name, layer) in names.iter().zip(&mut self.layers) {
            let targets: Vec<(&str, &mut Tensor)> = match layer {
                Layer::Conv(l) => vec![("weight", &mut l.weight), ("bias", &mut l.bias)],
                Layer::BatchNorm(l) => vec![
                    ("gamma", &mut l.gamma),
                    ("beta", &mut l.beta),
                    ("running_mean", &mut l.running_mean),
                    ("running_var", &mut l.running_var),
                ],
                Layer::Fc(l) => vec![("weight", &mut l.weight), ("bias", &mut l.bias)],
                _ => Vec::new(),
            };
            for (suffix, target) in targets {
                let key = format!("{name}.{suffix}");
                let src = lookup(&key)?;
                if src.shape() != target.shape() {
                    return Err(Error::Shape(format!(
                        "checkpoint entry '{key}' has shape {:?}, expected {:?}",
                        src.shape(),
                        target.shape()
                    )));
                }
                target.values_mut().copy_from_slice(src.values());
            }
        }
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }
}

/// Stacks feature matrices of the network's input shape into `[N, 1, H, W]`.
pub fn batch_tensor(features: &[&FeatureMatrix], bins: usize, frames: usize) -> Result<Tensor> {
    let mut values = Vec::with_capacity(features.len() * bins * frames);
    for fm in features {
        if fm.bins() != bins || fm.frames() != frames {
            return Err(Error::Shape(format!(
                "feature matrix is {}x{}, network expects {bins}x{frames}",
                fm.bins(),
                fm.frames()
            )));
        }
        values.extend_from_slice(fm.data());
    }
    Tensor::new(vec![features.len(), 1, bins, frames], values)
}

/// Random source for eval-mode passes, which never draw.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("eval-mode forward does not draw random numbers")
    }

    fn next_u64(&mut self) -> u64 {
        unreachable!("eval-mode forward does not draw random numbers")
    }

    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("eval-mode forward does not draw random numbers")
    }
}
