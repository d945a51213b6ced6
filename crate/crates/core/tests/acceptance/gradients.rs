//! Finite-difference checks for every layer and the angular-margin loss.

use antispoof::asoftmax::ASoftmaxHead;
use antispoof::tensor::{
    gradient_check, gradient_check_with, BatchNorm, Conv2d, Dropout, Linear, MaxPool2d, Mfm, Mode,
    Stencil, Tensor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INSTANCES: usize = 20;
/// Step for the piecewise-linear max and MFM routing: small enough not to
/// cross a switch between competing inputs.
const EPS: f64 = 1e-6;
/// Step for maps linear in the perturbed variable (conv, FC, dropout mask),
/// where central differences are exact and only rounding matters.
const LINEAR_EPS: f64 = 1e-3;
/// Five-point steps for the smooth batch-norm map and the margin loss. The
/// loss step stays small because ψ is only C¹ where its branches meet.
const BN_EPS: f64 = 1e-3;
const LOSS_EPS: f64 = 1e-5;

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let len = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

/// Upstream weights with magnitude in [0.5, 1], so each routed gradient is
/// either exactly zero or clearly not.
fn routing_weights(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let len = shape.iter().product();
    let v = (0..len)
        .map(|_| rng.random_range(0.5..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    Tensor::new(shape.to_vec(), v).unwrap()
}

/// `Σ r ⊙ y`: a scalar whose gradient with respect to `y` is `r`.
fn project(y: &Tensor, r: &Tensor) -> f64 {
    y.values().iter().zip(r.values()).map(|(a, b)| a * b).sum()
}

/// Worst relative error over the input gradient and any parameter gradients.
type Check = fn(&mut ChaCha8Rng) -> f64;

fn conv(rng: &mut ChaCha8Rng) -> f64 {
    let (n, ci, co) = (
        rng.random_range(1..=2),
        rng.random_range(1..=3),
        rng.random_range(1..=3),
    );
    let k = [1, 3, 5][rng.random_range(0..3)];
    let (h, w) = (rng.random_range(3..=6), rng.random_range(3..=6));
    let x = random(&[n, ci, h, w], rng);
    let wt = random(&[co, ci, k, k], rng);
    let b = random(&[co], rng);
    let make = |wt: &Tensor, b: &Tensor| {
        Conv2d::from_params(wt.values().to_vec(), b.values().to_vec(), ci, co, k).unwrap()
    };
    let mut layer = make(&wt, &b);
    let y = layer.forward(&x).unwrap();
    let r = random(y.shape(), rng);
    let gx = layer.backward(&r).unwrap();
    let ex = gradient_check(
        |t| project(&make(&wt, &b).forward(t).unwrap(), &r),
        &x,
        gx.values(),
        LINEAR_EPS,
    );
    let ew = gradient_check(
        |t| project(&make(t, &b).forward(&x).unwrap(), &r),
        &wt,
        layer.weight.grad().unwrap(),
        LINEAR_EPS,
    );
    let eb = gradient_check(
        |t| project(&make(&wt, t).forward(&x).unwrap(), &r),
        &b,
        layer.bias.grad().unwrap(),
        LINEAR_EPS,
    );
    ex.max(ew).max(eb)
}

fn maxpool(rng: &mut ChaCha8Rng) -> f64 {
    let shape = [
        rng.random_range(1..=2),
        rng.random_range(1..=3),
        rng.random_range(2..=7),
        rng.random_range(2..=7),
    ];
    let x = random(&shape, rng);
    let mut layer = MaxPool2d::new();
    let y = layer.forward(&x).unwrap();
    let r = routing_weights(y.shape(), rng);
    let gx = layer.backward(&r).unwrap();
    gradient_check(
        |t| project(&MaxPool2d::new().forward(t).unwrap(), &r),
        &x,
        gx.values(),
        EPS,
    )
}

fn batchnorm(rng: &mut ChaCha8Rng) -> f64 {
    let c = rng.random_range(1..=3);
    let shape: Vec<usize> = if rng.random_bool(0.5) {
        vec![rng.random_range(3..=8), c]
    } else {
        vec![
            rng.random_range(2..=3),
            c,
            rng.random_range(2..=4),
            rng.random_range(2..=4),
        ]
    };
    let mode = if rng.random_bool(0.75) {
        Mode::Train
    } else {
        Mode::Eval
    };
    let x = random(&shape, rng);
    let gamma = random(&[c], rng);
    let beta = random(&[c], rng);
    let mean = random(&[c], rng);
    let var: Vec<f64> = (0..c).map(|_| rng.random_range(0.5..2.0)).collect();
    let make = |g: &Tensor, b: &Tensor| {
        let mut bn = BatchNorm::new(c).unwrap();
        bn.gamma.values_mut().copy_from_slice(g.values());
        bn.beta.values_mut().copy_from_slice(b.values());
        bn.running_mean.values_mut().copy_from_slice(mean.values());
        bn.running_var.values_mut().copy_from_slice(&var);
        bn
    };
    let mut layer = make(&gamma, &beta);
    let y = layer.forward(&x, mode).unwrap();
    let r = random(y.shape(), rng);
    let gx = layer.backward(&r).unwrap();
    let f = |g: &Tensor, b: &Tensor, t: &Tensor| project(&make(g, b).forward(t, mode).unwrap(), &r);
    let ex = gradient_check_with(
        |t| f(&gamma, &beta, t),
        &x,
        gx.values(),
        BN_EPS,
        Stencil::FivePoint,
    );
    let eg = gradient_check_with(
        |t| f(t, &beta, &x),
        &gamma,
        layer.gamma.grad().unwrap(),
        BN_EPS,
        Stencil::FivePoint,
    );
    let eb = gradient_check_with(
        |t| f(&gamma, t, &x),
        &beta,
        layer.beta.grad().unwrap(),
        BN_EPS,
        Stencil::FivePoint,
    );
    ex.max(eg).max(eb)
}

fn fully_connected(rng: &mut ChaCha8Rng) -> f64 {
    let (n, d, k) = (
        rng.random_range(1..=4),
        rng.random_range(1..=8),
        rng.random_range(1..=5),
    );
    let x = random(&[n, d], rng);
    let wt = random(&[k, d], rng);
    let b = random(&[k], rng);
    let make = |wt: &Tensor, b: &Tensor| {
        Linear::from_params(wt.values().to_vec(), b.values().to_vec(), d, k).unwrap()
    };
    let mut layer = make(&wt, &b);
    let y = layer.forward(&x).unwrap();
    let r = random(y.shape(), rng);
    let gx = layer.backward(&r).unwrap();
    let ex = gradient_check(
        |t| project(&make(&wt, &b).forward(t).unwrap(), &r),
        &x,
        gx.values(),
        LINEAR_EPS,
    );
    let ew = gradient_check(
        |t| project(&make(t, &b).forward(&x).unwrap(), &r),
        &wt,
        layer.weight.grad().unwrap(),
        LINEAR_EPS,
    );
    let eb = gradient_check(
        |t| project(&make(&wt, t).forward(&x).unwrap(), &r),
        &b,
        layer.bias.grad().unwrap(),
        LINEAR_EPS,
    );
    ex.max(ew).max(eb)
}

fn max_feature_map(rng: &mut ChaCha8Rng) -> f64 {
    let c = 2 * rng.random_range(1..=3);
    let shape: Vec<usize> = if rng.random_bool(0.5) {
        vec![rng.random_range(1..=4), c]
    } else {
        vec![
            rng.random_range(1..=2),
            c,
            rng.random_range(1..=4),
            rng.random_range(1..=4),
        ]
    };
    let x = random(&shape, rng);
    let mut layer = Mfm::default();
    let y = layer.forward(&x).unwrap();
    let r = routing_weights(y.shape(), rng);
    let gx = layer.backward(&r).unwrap();
    gradient_check(
        |t| project(&Mfm::default().forward(t).unwrap(), &r),
        &x,
        gx.values(),
        EPS,
    )
}

/// Eval mode (identity) and train mode with a mask frozen by reseeding.
fn dropout_off(rng: &mut ChaCha8Rng) -> f64 {
    let shape = [rng.random_range(1..=4), rng.random_range(1..=10)];
    let p = rng.random_range(0.0..0.9);
    let mode = if rng.random_bool(0.5) {
        Mode::Eval
    } else {
        Mode::Train
    };
    let seed = rng.random::<u64>();
    let x = random(&shape, rng);
    let mut layer = Dropout::new(p).unwrap();
    let y = layer
        .forward(&x, mode, &mut ChaCha8Rng::seed_from_u64(seed))
        .unwrap();
    let r = random(y.shape(), rng);
    let gx = layer.backward(&r).unwrap();
    gradient_check(
        |t| {
            project(
                &Dropout::new(p)
                    .unwrap()
                    .forward(t, mode, &mut ChaCha8Rng::seed_from_u64(seed))
                    .unwrap(),
                &r,
            )
        },
        &x,
        gx.values(),
        LINEAR_EPS,
    )
}

fn asoftmax(margin: u32, rng: &mut ChaCha8Rng) -> f64 {
    let (n, d) = (rng.random_range(1..=6), rng.random_range(2..=8));
    let head = ASoftmaxHead::new(d, 2, margin, rng).unwrap();
    let x = random(&[n, d], rng);
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let lambda = [0.0, 0.5, 5.0, 1000.0][rng.random_range(0..4)];
    let out = head.loss_with_lambda(&x, &labels, lambda).unwrap();
    let ex = gradient_check_with(
        |t| head.loss_with_lambda(t, &labels, lambda).unwrap().loss,
        &x,
        out.grad_embeddings.values(),
        LOSS_EPS,
        Stencil::FivePoint,
    );
    let ew = gradient_check_with(
        |t| {
            let mut h = head.clone();
            h.weights = t.clone();
            h.loss_with_lambda(&x, &labels, lambda).unwrap().loss
        },
        &head.weights,
        &out.grad_weights,
        LOSS_EPS,
        Stencil::FivePoint,
    );
    ex.max(ew)
}

/// Runs every check; returns `(name, worst error, tolerance)` per target.
pub fn run(seed: u64) -> Vec<(String, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers: [(&str, Check); 6] = [
        ("conv2d", conv),
        ("maxpool2d", maxpool),
        ("batchnorm2d", batchnorm),
        ("fully_connected", fully_connected),
        ("mfm", max_feature_map),
        ("dropout", dropout_off),
    ];
    let mut out = Vec::new();
    for (name, check) in layers {
        let worst = (0..INSTANCES).map(|_| check(&mut rng)).fold(0.0, f64::max);
        out.push((name.to_string(), worst, 1e-6));
    }
    for m in [1, 2, 4] {
        let worst = (0..INSTANCES)
            .map(|_| asoftmax(m, &mut rng))
            .fold(0.0, f64::max);
        out.push((format!("asoftmax_loss m={m}"), worst, 1e-5));
    }
    out
}

/// Largest gap between the `m = 1, λ = 0` loss and plain softmax
/// cross-entropy over `‖x‖ cos θ` logits.
pub fn reduction_gap(batches: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..batches {
        let (n, d, k) = (
            rng.random_range(1..=16),
            rng.random_range(2..=12),
            rng.random_range(2..=4),
        );
        let head = ASoftmaxHead::new(d, k, 1, &mut rng).unwrap();
        let x = random(&[n, d], &mut rng);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let got = head.loss_with_lambda(&x, &labels, 0.0).unwrap().loss;
        let w = head.weights.values();
        let mut expect = 0.0;
        for (row, &y) in x.values().chunks(d).zip(&labels) {
            let xn = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            let logits: Vec<f64> = w
                .chunks(d)
                .map(|wj| {
                    let wn = wj.iter().map(|v| v * v).sum::<f64>().sqrt();
                    xn * row.iter().zip(wj).map(|(a, b)| a * b).sum::<f64>() / (xn * wn)
                })
                .collect();
            let lse = logits.iter().map(|l| l.exp()).sum::<f64>().ln();
            expect += lse - logits[y];
        }
        worst = worst.max((got - expect / n as f64).abs());
    }
    worst
}
