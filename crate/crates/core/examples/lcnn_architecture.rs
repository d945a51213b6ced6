//! Prints the LCNN layer table (output shapes and parameter counts) for a
//! channel scale and input size.
//!
//! ```bash
//! cargo run --release --example lcnn_architecture -- [scale] [bins] [frames]
//! cargo run --release --example lcnn_architecture -- 1/8 107 75
//! ```

use antispoof::lcnn::{NetworkSpec, Scale};
use antispoof::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let scale: Scale = args.next().as_deref().unwrap_or("1").parse()?;
    let bins = args.next().and_then(|s| s.parse().ok()).unwrap_or(863);
    let frames = args.next().and_then(|s| s.parse().ok()).unwrap_or(600);
    let spec = NetworkSpec::scaled(scale, bins, frames)?;

    let params = spec.param_counts()?;
    println!("scale {scale}, input {bins} x {frames}");
    println!("{:<14} {:<18} {:>12}", "layer", "output", "parameters");
    let mut total = 0;
    for (name, shape) in spec.layer_shapes()? {
        let count = params.iter().find(|(n, _)| *n == name).map_or(0, |p| p.1);
        total += count;
        let shape = shape
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("x");
        let count = if count > 0 {
            count.to_string()
        } else {
            String::new()
        };
        println!("{name:<14} {shape:<18} {count:>12}");
    }
    let conv: usize = params
        .iter()
        .filter(|(n, _)| n.starts_with("Conv"))
        .map(|p| p.1)
        .sum();
    println!(
        "embedding dim {}, conv parameters {conv}, total {total}",
        spec.embedding_dim()
    );
    Ok(())
}
