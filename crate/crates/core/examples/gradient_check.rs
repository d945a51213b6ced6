//! Verifies back-propagated gradients of a small conv → MFM → pool → BN →
//! linear stack against central finite differences.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use antispoof::tensor::{gradient_check, BatchNorm, Conv2d, Linear, MaxPool2d, Mfm, Mode, Tensor};
use antispoof::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Stack {
    conv: Conv2d,
    mfm: Mfm,
    pool: MaxPool2d,
    bn: BatchNorm,
    fc: Linear,
}

impl Stack {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let h = self.conv.forward(x)?;
        let h = self.mfm.forward(&h)?;
        let h = self.pool.forward(&h)?;
        let h = self.bn.forward(&h, Mode::Train)?;
        let n = h.shape()[0];
        let flat = h.len() / n;
        self.fc.forward(&h.reshape(vec![n, flat])?)
    }

    fn backward(&mut self, g: &Tensor, pooled_shape: &[usize]) -> Result<Tensor> {
        let g = self.fc.backward(g)?.reshape(pooled_shape.to_vec())?;
        let g = self.bn.backward(&g)?;
        let g = self.pool.backward(&g)?;
        let g = self.mfm.backward(&g)?;
        self.conv.backward(&g)
    }
}

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let conv = Conv2d::new(1, 4, 3, &mut rng)?;
    let fc = Linear::new(2 * 3 * 3, 3, &mut rng)?;
    let make = || Stack {
        conv: conv.clone(),
        mfm: Mfm::default(),
        pool: MaxPool2d::new(),
        bn: BatchNorm::new(2).expect("channels"),
        fc: fc.clone(),
    };
    let x = Tensor::new(
        vec![3, 1, 6, 6],
        (0..108).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )?;
    let r = Tensor::new(
        vec![3, 3],
        (0..9).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )?;
    let objective = |y: &Tensor| {
        y.values()
            .iter()
            .zip(r.values())
            .map(|(a, b)| a * b)
            .sum::<f64>()
    };

    let mut stack = make();
    let y = stack.forward(&x)?;
    let grad = stack.backward(&r, &[3, 2, 3, 3])?;
    let err = gradient_check(
        |t| objective(&make().forward(t).expect("forward")),
        &x,
        grad.values(),
        1e-6,
    );
    println!("input gradient:       max relative error {err:.2e}");

    let weight = stack.conv.weight.clone();
    let err = gradient_check(
        |w| {
            let mut s = make();
            s.conv.weight = w.clone();
            objective(&s.forward(&x).expect("forward"))
        },
        &weight,
        stack.conv.weight.grad().expect("grad buffer"),
        1e-6,
    );
    println!("conv weight gradient: max relative error {err:.2e}");
    println!("objective {:.6}", objective(&y));
    Ok(())
}
