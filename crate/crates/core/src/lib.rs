//! Voice anti-spoofing with Light CNNs.
//!
//! The pipeline runs from waveform to decision score:
//!
//! - [`features`]: FFT, constant-Q and DCT log-power spectrograms, LFCC
//!   cepstra, energy SAD and CMVN.
//! - [`tensor`]: the dense arrays and layers the network is built from,
//!   with layer-level reverse-mode gradients.
//! - [`lcnn`]: the Max-Feature-Map network at any channel scale, plus
//!   training and scoring.
//! - [`asoftmax`]: the angular-margin softmax head.
//! - [`metrics`]: EER and min-tDCF.
//! - [`fusion`]: genuine-std normalized score fusion.
//! - [`corpus`]: a deterministic synthetic genuine/spoof corpus and the
//!   protocol file format.
//! - [`cli`]: the `antispoof` command line.
//!
//! Each major capability has a runnable program under `examples/`:
//!
//! ```bash
//! cargo run --release --example feature_extraction
//! cargo run --release --example cqt_analysis
//! cargo run --release --example cmvn_and_sad
//! cargo run --release --example lcnn_architecture -- 1/8 107 75
//! cargo run --release --example asoftmax_margin
//! cargo run --release --example gradient_check
//! cargo run --release --example synth_corpus -- out/corpus
//! cargo run --release --example train_toy -- fft 20
//! cargo run --release --example evaluate_metrics
//! cargo run --release --example fuse_scores
//! ```

pub mod asoftmax;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod features;
pub mod fusion;
pub mod lcnn;
pub mod metrics;
pub mod tensor;

pub use error::{Error, Result};
