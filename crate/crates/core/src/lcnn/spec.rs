//! Declarative description of the Light CNN.
//!
//! The reference layout (scale 1, 863 × 600 input):
//!
//! ```text
//! Conv_1 5×5 → 64, MFM_2 → 32, MaxPool_3
//! Conv_4 1×1 → 64, MFM_5 → 32, BatchNorm_6, Conv_7 3×3 → 96, MFM_8 → 48
//! MaxPool_9, BatchNorm_10
//! Conv_11 1×1 → 96, MFM_12 → 48, BatchNorm_13, Conv_14 3×3 → 128, MFM_15 → 64
//! MaxPool_16
//! Conv_17 1×1 → 128, MFM_18 → 64, BatchNorm_19, Conv_20 3×3 → 64, MFM_21 → 32
//! BatchNorm_22, Conv_23 1×1 → 64, MFM_24 → 32, BatchNorm_25, Conv_26 3×3 → 64
//! MFM_27 → 32, MaxPool_28
//! (dropout) FC_29 → 160, MFM_30 → 80, BatchNorm_31
//! ```
//!
//! followed by the two-class angular-margin head (`FC_32`). A scaled variant
//! multiplies every channel count and the FC width by a rational factor and
//! takes its own input size; the layer sequence never changes.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum LayerDesc {
    /// Square kernel, stride 1, same padding.
    Conv {
        name: String,
        kernel: usize,
        channels: usize,
    },
    Mfm {
        name: String,
    },
    MaxPool {
        name: String,
    },
    BatchNorm {
        name: String,
    },
    Dropout {
        prob: f64,
    },
    Flatten,
    Fc {
        name: String,
        units: usize,
    },
}

impl LayerDesc {
    pub fn name(&self) -> &str {
        match self {
            LayerDesc::Conv { name, .. }
            | LayerDesc::Mfm { name }
            | LayerDesc::MaxPool { name }
            | LayerDesc::BatchNorm { name }
            | LayerDesc::Fc { name, .. } => name,
            LayerDesc::Dropout { .. } => "Dropout",
            LayerDesc::Flatten => "Flatten",
        }
    }
}

/// Positive rational channel multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scale {
    pub num: u32,
    pub den: u32,
}

impl Scale {
    pub const ONE: Scale = Scale { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Config("scale must be a positive ratio".into()));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    /// Scales a channel count; the result must be a whole number.
    pub fn apply(&self, channels: usize) -> Result<usize> {
        let scaled = channels * self.num as usize;
        if scaled % self.den as usize != 0 {
            return Err(Error::Config(format!(
                "{channels} channels do not scale evenly by {self}"
            )));
        }
        Ok(scaled / self.den as usize)
    }

    pub fn as_f64(&self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    /// Accepts `a/b` or a decimal with a denominator of at most 1024.
    fn from_str(s: &str) -> Result<Self> {
        if let Some((a, b)) = s.split_once('/') {
            let a = a
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad scale '{s}'")))?;
            let b = b
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad scale '{s}'")))?;
            return Scale::new(a, b);
        }
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad scale '{s}'")))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Config(format!("bad scale '{s}'")));
        }
        for den in 1..=1024u32 {
            let num = (v * f64::from(den)).round();
            if num >= 1.0 && (num / f64::from(den) - v).abs() < 1e-9 {
                return Scale::new(num as u32, den);
            }
        }
        Err(Error::Config(format!("scale '{s}' is not a simple ratio")))
    }
}

/// Layer list plus input geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub layers: Vec<LayerDesc>,
    pub input_bins: usize,
    pub input_frames: usize,
    pub scale: Scale,
    pub dropout: f64,
}

pub const DEFAULT_DROPOUT: f64 = 0.75;

/// Drop rate for 1/8-scale networks, whose flattened FC_29 input has only
/// ~100 elements; 0.75 of that starves the classifier.
pub const DESK_SCALE_DROPOUT: f64 = 0.25;

impl NetworkSpec {
    /// Reference network for an 863 × 600 input.
    pub fn reference() -> Self {
        Self::scaled(Scale::ONE, 863, 600).expect("reference layout is valid")
    }

    /// Reference layout with channels and FC width multiplied by `scale`.
    pub fn scaled(scale: Scale, input_bins: usize, input_frames: usize) -> Result<Self> {
        let conv = |name: &str, kernel: usize, channels: usize| -> Result<LayerDesc> {
            Ok(LayerDesc::Conv {
                name: name.into(),
                kernel,
                channels: scale.apply(channels)?,
            })
        };
        let mfm = |name: &str| LayerDesc::Mfm { name: name.into() };
        let pool = |name: &str| LayerDesc::MaxPool { name: name.into() };
        let bn = |name: &str| LayerDesc::BatchNorm { name: name.into() };
        let layers = vec![
            conv("Conv_1", 5, 64)?,
            mfm("MFM_2"),
            pool("MaxPool_3"),
            conv("Conv_4", 1, 64)?,
            mfm("MFM_5"),
            bn("BatchNorm_6"),
            conv("Conv_7", 3, 96)?,
            mfm("MFM_8"),
            pool("MaxPool_9"),
            bn("BatchNorm_10"),
            conv("Conv_11", 1, 96)?,
            mfm("MFM_12"),
            bn("BatchNorm_13"),
            conv("Conv_14", 3, 128)?,
            mfm("MFM_15"),
            pool("MaxPool_16"),
            conv("Conv_17", 1, 128)?,
            mfm("MFM_18"),
            bn("BatchNorm_19"),
            conv("Conv_20", 3, 64)?,
            mfm("MFM_21"),
            bn("BatchNorm_22"),
            conv("Conv_23", 1, 64)?,
            mfm("MFM_24"),
            bn("BatchNorm_25"),
            conv("Conv_26", 3, 64)?,
            mfm("MFM_27"),
            pool("MaxPool_28"),
            LayerDesc::Flatten,
            LayerDesc::Dropout {
                prob: DEFAULT_DROPOUT,
            },
            LayerDesc::Fc {
                name: "FC_29".into(),
                units: scale.apply(160)?,
            },
            mfm("MFM_30"),
            bn("BatchNorm_31"),
        ];
        let spec = Self {
            layers,
            input_bins,
            input_frames,
            scale,
            dropout: DEFAULT_DROPOUT,
        };
        spec.layer_shapes()?;
        Ok(spec)
    }

    pub fn with_dropout(mut self, prob: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&prob) {
            return Err(Error::Config(format!("dropout {prob} outside [0, 1)")));
        }
        for l in &mut self.layers {
            if let LayerDesc::Dropout { prob: p } = l {
                *p = prob;
            }
        }
        self.dropout = prob;
        Ok(self)
    }

    /// Output shape after every layer: `[C, H, W]` for maps, `[D]` after
    /// flattening. Validates the whole stack.
    pub fn layer_shapes(&self) -> Result<Vec<(String, Vec<usize>)>> {
        if self.input_bins == 0 || self.input_frames == 0 {
            return Err(Error::Config("input must be non-empty".into()));
        }
        let mut shape = vec![1, self.input_bins, self.input_frames];
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            shape = match (layer, shape.as_slice()) {
                (
                    LayerDesc::Conv {
                        kernel, channels, ..
                    },
                    [_, h, w],
                ) => {
                    if kernel % 2 == 0 {
                        return Err(Error::Config(format!("{}: even kernel", layer.name())));
                    }
                    vec![*channels, *h, *w]
                }
                (LayerDesc::Mfm { .. }, [c, rest @ ..]) => {
                    if c % 2 != 0 {
                        return Err(Error::Config(format!(
                            "{} follows a layer with {c} (odd) channels",
                            layer.name()
                        )));
                    }
                    let mut s = vec![c / 2];
                    s.extend_from_slice(rest);
                    s
                }
                (LayerDesc::MaxPool { .. }, [c, h, w]) => {
                    if *h < 2 || *w < 2 {
                        return Err(Error::Config(format!(
                            "{}: {h}x{w} map is too small to pool",
                            layer.name()
                        )));
                    }
                    vec![*c, h / 2, w / 2]
                }
                (LayerDesc::BatchNorm { .. } | LayerDesc::Dropout { .. }, s) => s.to_vec(),
                (LayerDesc::Flatten, s) => vec![s.iter().product()],
                (LayerDesc::Fc { units, .. }, [_]) => vec![*units],
                (l, s) => {
                    return Err(Error::Config(format!(
                        "{} cannot follow an output of shape {s:?}",
                        l.name()
                    )))
                }
            };
            out.push((layer.name().to_string(), shape.clone()));
        }
        match shape.as_slice() {
            [_] => Ok(out),
            s => Err(Error::Config(format!(
                "network must end in a vector, got {s:?}"
            ))),
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.layer_shapes()
            .ok()
            .and_then(|s| s.last().map(|(_, sh)| sh[0]))
            .unwrap_or(0)
    }

    /// Trainable parameter count per layer (weights + biases; batch-norm
    /// scale and shift).
    pub fn param_counts(&self) -> Result<Vec<(String, usize)>> {
        let shapes = self.layer_shapes()?;
        let mut prev = vec![1, self.input_bins, self.input_frames];
        let mut out = Vec::new();
        for (layer, (_, shape)) in self.layers.iter().zip(&shapes) {
            let n = match layer {
                LayerDesc::Conv {
                    kernel, channels, ..
                } => kernel * kernel * prev[0] * channels + channels,
                LayerDesc::Fc { units, .. } => prev[0] * units + units,
                LayerDesc::BatchNorm { .. } => 2 * prev[0],
                _ => 0,
            };
            out.push((layer.name().to_string(), n));
            prev = shape.clone();
        }
        Ok(out)
    }
}
