use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::Tensor;
use crate::error::{Error, Result};

/// I.i.d. `Normal(0, sqrt(2 / fan_in))` entries.
pub fn kaiming_normal_init<R: Rng + ?Sized>(
    shape: &[usize],
    fan_in: usize,
    rng: &mut R,
) -> Result<Tensor> {
    if fan_in == 0 {
        return Err(Error::Config("fan-in must be at least 1".into()));
    }
    let std = (2.0 / fan_in as f64).sqrt();
    let normal = Normal::new(0.0, std).map_err(|e| Error::Config(e.to_string()))?;
    let len = shape.iter().product();
    Tensor::parameter(
        shape.to_vec(),
        (0..len).map(|_| normal.sample(rng)).collect(),
    )
}
