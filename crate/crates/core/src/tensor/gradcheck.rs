//! Central finite-difference gradient checking.

use super::Tensor;

/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central-difference stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// `(f(x+h) - f(x-h)) / 2h`, error `O(h²)`.
    ThreePoint,
    /// `(f(x-2h) - 8f(x-h) + 8f(x+h) - f(x+2h)) / 12h`, error `O(h⁴)`; lets
    /// smooth functions use a larger step and so lose less to rounding.
    FivePoint,
}

/// Largest elementwise relative error between `analytic` and central
/// differences of the scalar function `f` around `input`.
pub fn gradient_check<F>(f: F, input: &Tensor, analytic: &[f64], eps: f64) -> f64
where
    F: FnMut(&Tensor) -> f64,
{
    gradient_check_with(f, input, analytic, eps, Stencil::ThreePoint)
}

pub fn gradient_check_with<F>(
    mut f: F,
    input: &Tensor,
    analytic: &[f64],
    eps: f64,
    stencil: Stencil,
) -> f64
where
    F: FnMut(&Tensor) -> f64,
{
    assert_eq!(analytic.len(), input.len(), "analytic gradient length");
    let mut probe = input.clone();
    let mut worst = 0.0f64;
    for i in 0..input.len() {
        let orig = input.values()[i];
        let mut at = |offset: f64| {
            probe.values_mut()[i] = orig + offset;
            let v = f(&probe);
            probe.values_mut()[i] = orig;
            v
        };
        let numeric = match stencil {
            Stencil::ThreePoint => (at(eps) - at(-eps)) / (2.0 * eps),
            Stencil::FivePoint => {
                (at(-2.0 * eps) - 8.0 * at(-eps) + 8.0 * at(eps) - at(2.0 * eps)) / (12.0 * eps)
            }
        };
        worst = worst.max(relative_error(numeric, analytic[i]));
    }
    worst
}
