//! Angular-margin softmax head.
//!
//! The classification layer holds one unit-norm direction per class. For an
//! embedding `x` at angle `θ_j` to class `j` the logits are `‖x‖ cos θ_j` for
//! the non-target classes and `‖x‖ ψ(θ_y)` for the target class, where
//!
//! ```text
//! ψ(θ) = (-1)^k cos(mθ) - 2k,   θ ∈ [kπ/m, (k+1)π/m],  k = 0..m-1
//! ```
//!
//! is the monotone extension of `cos(mθ)`. `ψ` is evaluated through the
//! Chebyshev identity `cos(mθ) = T_m(cos θ)`, which keeps its derivative with
//! respect to the cosine polynomial (no `1 / sin θ` singularity).
//!
//! Training from scratch with `m ≥ 2` uses the usual annealing: the target
//! logit is `‖x‖ (λ cos θ + ψ(θ)) / (1 + λ)` with `λ` decaying over
//! iterations.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{kaiming_normal_init, Tensor};

pub const GENUINE: usize = 0;
pub const SPOOF: usize = 1;

/// Chebyshev polynomials `T_m(c)` and `U_{m-1}(c)`.
fn chebyshev(m: u32, c: f64) -> (f64, f64) {
    let (mut t_prev, mut t) = (1.0, c);
    let (mut u_prev, mut u) = (0.0, 1.0);
    if m == 0 {
        return (1.0, 0.0);
    }
    for _ in 1..m {
        let t_next = 2.0 * c * t - t_prev;
        let u_next = 2.0 * c * u - u_prev;
        t_prev = t;
        t = t_next;
        u_prev = u;
        u = u_next;
    }
    (t, u)
}

/// `ψ(θ)` for `θ ∈ [0, π]`.
pub fn psi(theta: f64, m: u32) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::InvalidInput(format!("angle {theta} outside [0, π]")));
    }
    if m == 0 {
        return Err(Error::Config("margin must be at least 1".into()));
    }
    let k = ((theta * m as f64 / PI).floor() as u32).min(m - 1);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * (m as f64 * theta).cos() - 2.0 * k as f64)
}

/// `ψ` as a function of `c = cos θ` and its derivative `dψ/dc`.
pub fn psi_of_cos(c: f64, m: u32) -> (f64, f64) {
    let c = c.clamp(-1.0, 1.0);
    let theta = c.acos();
    let k = ((theta * m as f64 / PI).floor() as u32).min(m - 1);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let (t, u) = chebyshev(m, c);
    (sign * t - 2.0 * k as f64, sign * m as f64 * u)
}

/// Exponential decay of the annealing weight `λ` towards a floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSchedule {
    pub start: f64,
    pub min: f64,
    pub decay: f64,
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        Self {
            start: 1000.0,
            min: 5.0,
            decay: 0.99,
        }
    }
}

impl LambdaSchedule {
    /// No annealing: the pure margin loss.
    pub fn off() -> Self {
        Self {
            start: 0.0,
            min: 0.0,
            decay: 1.0,
        }
    }

    pub fn at(&self, iteration: u64) -> f64 {
        let v = self.start * self.decay.powf(iteration as f64);
        v.max(self.min)
    }
}

/// Loss value and gradients for one batch.
#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    /// Same shape as the embeddings.
    pub grad_embeddings: Tensor,
    /// Same shape as the head weights.
    pub grad_weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ASoftmaxHead {
    /// `[classes, dim]`; row `j` is the direction of class `j`.
    pub weights: Tensor,
    pub margin: u32,
    pub schedule: LambdaSchedule,
    /// Apply `ψ` to the non-target logits too, as the loss is sometimes
    /// printed. Off by default.
    pub strict_margin_all_classes: bool,
    iteration: u64,
}

impl ASoftmaxHead {
    pub fn new<R: Rng + ?Sized>(
        dim: usize,
        classes: usize,
        margin: u32,
        rng: &mut R,
    ) -> Result<Self> {
        let w = kaiming_normal_init(&[classes, dim], dim, rng)?;
        Self::from_weights(w.into_values(), classes, dim, margin)
    }

    pub fn from_weights(
        weights: Vec<f64>,
        classes: usize,
        dim: usize,
        margin: u32,
    ) -> Result<Self> {
        if margin == 0 {
            return Err(Error::Config("margin must be at least 1".into()));
        }
        if classes < 2 {
            return Err(Error::Config("the head needs at least two classes".into()));
        }
        let mut head = Self {
            weights: Tensor::parameter(vec![classes, dim], weights)?,
            margin,
            schedule: LambdaSchedule::default(),
            strict_margin_all_classes: false,
            iteration: 0,
        };
        head.renormalize_columns()?;
        Ok(head)
    }

    pub fn classes(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len()
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn lambda(&self) -> f64 {
        self.schedule.at(self.iteration)
    }

    pub fn set_iteration(&mut self, iteration: u64) {
        self.iteration = iteration;
    }

    /// Advances the annealing schedule by one optimizer step.
    pub fn advance(&mut self) {
        self.iteration += 1;
    }

    pub fn class_direction(&self, class: usize) -> &[f64] {
        let d = self.dim();
        &self.weights.values()[class * d..(class + 1) * d]
    }

    /// Scales every class direction to unit L2 norm.
    pub fn renormalize_columns(&mut self) -> Result<()> {
        let d = self.dim();
        for (j, row) in self.weights.values_mut().chunks_exact_mut(d).enumerate() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::Numerical(format!(
                    "class direction {j} has norm {norm}"
                )));
            }
            row.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(())
    }

    /// Cosines between `x` and every class direction.
    pub fn cosines(&self, x: &[f64]) -> Result<Vec<f64>> {
        let xn = norm(x);
        if !(xn > 0.0) {
            return Err(Error::InvalidInput("zero-norm embedding".into()));
        }
        Ok((0..self.classes())
            .map(|j| {
                let w = self.class_direction(j);
                dot(w, x) / (norm(w) * xn)
            })
            .collect())
    }

    /// Margin-free detection score `cos θ_genuine - cos θ_spoof`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let c = self.cosines(x)?;
        Ok(c[GENUINE] - c[SPOOF])
    }

    /// Logit-difference score `‖x‖ (cos θ_genuine - cos θ_spoof)`.
    pub fn logit_score(&self, x: &[f64]) -> Result<f64> {
        Ok(norm(x) * self.score(x)?)
    }

    /// Mean angular-margin loss over the batch at the current `λ`.
    pub fn loss(&self, embeddings: &Tensor, labels: &[usize]) -> Result<LossOutput> {
        self.loss_with_lambda(embeddings, labels, self.lambda())
    }

    pub fn loss_with_lambda(
        &self,
        embeddings: &Tensor,
        labels: &[usize],
        lambda: f64,
    ) -> Result<LossOutput> {
        let (n, d) = embeddings.dims2()?;
        if d != self.dim() {
            return Err(Error::Shape(format!(
                "embedding dim {d} does not match head dim {}",
                self.dim()
            )));
        }
        if labels.len() != n {
            return Err(Error::Shape(format!(
                "{} labels for {n} embeddings",
                labels.len()
            )));
        }
        let k = self.classes();
        if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::InvalidInput(format!(
                "label {bad} outside {k} classes"
            )));
        }
        let w = self.weights.values();
        let w_norms: Vec<f64> = w.chunks_exact(d).map(norm).collect();
        let mut grad_x = vec![0.0; n * d];
        let mut grad_w = vec![0.0; k * d];
        let mut total = 0.0;
        let inv_n = 1.0 / n as f64;

        for (i, (x, &y)) in embeddings.values().chunks_exact(d).zip(labels).enumerate() {
            let xn = norm(x);
            if !(xn > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "zero-norm embedding at row {i}"
                )));
            }
            // (g, dg/dc, cos) per class; the logit is ‖x‖ g(c).
            let parts: Vec<(f64, f64, f64)> = (0..k)
                .map(|j| {
                    let wj = &w[j * d..(j + 1) * d];
                    let c = dot(wj, x) / (w_norms[j] * xn);
                    let (g, dg) = if j == y {
                        let (p, dp) = psi_of_cos(c, self.margin);
                        (
                            (lambda * c + p) / (1.0 + lambda),
                            (lambda + dp) / (1.0 + lambda),
                        )
                    } else if self.strict_margin_all_classes {
                        psi_of_cos(c, self.margin)
                    } else {
                        (c, 1.0)
                    };
                    (g, dg, c)
                })
                .collect();
            let logits: Vec<f64> = parts.iter().map(|(g, _, _)| xn * g).collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = logits.iter().map(|l| (l - max).exp()).sum();
            total += max + sum.ln() - logits[y];

            let gx = &mut grad_x[i * d..(i + 1) * d];
            for (j, &(g, dg, c)) in parts.iter().enumerate() {
                let prob = (logits[j] - max).exp() / sum;
                let dl = (prob - if j == y { 1.0 } else { 0.0 }) * inv_n;
                if dl == 0.0 {
                    continue;
                }
                let wj = &w[j * d..(j + 1) * d];
                let wn = w_norms[j];
                let gw = &mut grad_w[j * d..(j + 1) * d];
                for t in 0..d {
                    let xh = x[t] / xn;
                    let wh = wj[t] / wn;
                    // d(‖x‖ g(c))/dx = g x̂ + g' (ŵ - c x̂)
                    gx[t] += dl * (g * xh + dg * (wh - c * xh));
                    // d(‖x‖ g(c))/dw = ‖x‖ g' (x̂ - c ŵ) / ‖w‖
                    gw[t] += dl * xn * dg * (xh - c * wh) / wn;
                }
            }
        }
        Ok(LossOutput {
            loss: total * inv_n,
            grad_embeddings: Tensor::new(vec![n, d], grad_x)?,
            grad_weights: grad_w,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
