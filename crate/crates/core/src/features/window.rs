use std::f64::consts::PI;
use std::str::FromStr;

use crate::error::Error;

/// Analysis window applied multiplicatively to each frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowFn {
    Blackman,
    Hamming,
    Rect,
}

impl WindowFn {
    /// Symmetric window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![1.0];
        }
        let denom = (n - 1) as f64;
        (0..n)
            .map(|i| {
                let x = i as f64 / denom;
                match self {
                    WindowFn::Blackman => {
                        0.42 - 0.5 * (2.0 * PI * x).cos() + 0.08 * (4.0 * PI * x).cos()
                    }
                    WindowFn::Hamming => 0.54 - 0.46 * (2.0 * PI * x).cos(),
                    WindowFn::Rect => 1.0,
                }
            })
            .collect()
    }
}

impl FromStr for WindowFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "blackman" => Ok(WindowFn::Blackman),
            "hamming" => Ok(WindowFn::Hamming),
            "rect" | "rectangular" | "boxcar" => Ok(WindowFn::Rect),
            other => Err(Error::Config(format!("unknown window '{other}'"))),
        }
    }
}
