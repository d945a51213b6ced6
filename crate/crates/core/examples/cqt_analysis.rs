//! Constant-Q analysis: bin layout, kernel lengths and the response to pure
//! tones placed on bin centres.
//!
//! ```bash
//! cargo run --release --example cqt_analysis
//! ```

use std::f64::consts::PI;

use antispoof::features::cqt::{natural_kernel_len, quality_factor};
use antispoof::features::{cqt_center_frequencies, cqt_log_power, FrontEndConfig, Waveform};
use antispoof::Result;

fn main() -> Result<()> {
    let cfg = FrontEndConfig::cqt();
    let fs = 16_000.0;
    let freqs = cqt_center_frequencies(cfg.cqt_fmin_hz, cfg.bins_per_octave, cfg.cqt_bins);
    println!(
        "{} bins, {} per octave, Q = {:.2}, {:.3} Hz .. {:.1} Hz",
        freqs.len(),
        cfg.bins_per_octave,
        quality_factor(cfg.bins_per_octave),
        freqs[0],
        freqs[freqs.len() - 1]
    );
    println!(
        "bin  centre_hz  kernel  (natural length, capped at the {}-sample frame)",
        cfg.window_len_samples
    );
    for k in (0..freqs.len()).step_by(96) {
        let natural = natural_kernel_len(freqs[k], fs, cfg.bins_per_octave);
        println!(
            "{k:>3} {:>10.2} {:>7} ({natural})",
            freqs[k],
            natural.min(cfg.window_len_samples)
        );
    }

    println!("\ntone at bin  peak bin  magnitude");
    for k in [500, 600, 700, 800, 860] {
        let x = (0..cfg.window_len_samples)
            .map(|n| (2.0 * PI * freqs[k] * n as f64 / fs).cos())
            .collect();
        let fm = cqt_log_power(&Waveform::new(x, 16_000)?, &cfg)?;
        let col = fm.column(0);
        let peak = (0..col.len())
            .max_by(|&a, &b| col[a].total_cmp(&col[b]))
            .unwrap_or(0);
        println!("{k:>11} {peak:>9} {:>10.4}", col[peak].exp().sqrt());
    }
    Ok(())
}
