use std::collections::HashSet;

use antispoof::corpus::{
    generate_corpus, parse_protocol, quantize_8bit, read_wav, write_corpus, write_protocol,
    AttackKind, CorpusSpec, Utterance, PROTOCOL_FILE,
};
use antispoof::features::{fft_log_power, FrontEndConfig};
use antispoof::metrics::{Label, TrialRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(seed: u64) -> CorpusSpec {
    CorpusSpec {
        n_genuine: 6,
        n_spoof: 9,
        duration_s: 0.5,
        seed,
        ..CorpusSpec::default()
    }
}

fn distinct(samples: &[f64]) -> usize {
    samples
        .iter()
        .map(|v| v.to_bits())
        .collect::<HashSet<_>>()
        .len()
}

fn spoofs(utts: &[Utterance], kind: AttackKind) -> impl Iterator<Item = &Utterance> {
    utts.iter().filter(move |u| u.attack == Some(kind))
}

#[test]
fn fixed_seed_is_bit_identical_and_seeds_differ() {
    let (a, pa) = generate_corpus(&small(3)).unwrap();
    let (b, pb) = generate_corpus(&small(3)).unwrap();
    assert_eq!(a, b);
    let ids = |p: &[TrialRecord]| {
        p.iter()
            .map(|r| (r.trial_id.clone(), r.label, r.attack_id.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(ids(&pa), ids(&pb));
    let (c, _) = generate_corpus(&small(4)).unwrap();
    assert!(a.iter().zip(&c).all(|(x, y)| x.wave != y.wave));
}

#[test]
fn layout_and_attack_rotation() {
    let (utts, protocol) = generate_corpus(&small(5)).unwrap();
    assert_eq!(utts.len(), 15);
    assert!(utts[..6]
        .iter()
        .all(|u| u.label == Label::Bonafide && u.attack.is_none()));
    for kind in AttackKind::ALL {
        assert_eq!(spoofs(&utts, kind).count(), 3);
    }
    assert_eq!(protocol[0].trial_id, "T_00000");
    assert_eq!(protocol[14].attack_id.as_deref(), Some("quantize"));
    for u in &utts {
        assert_eq!(u.wave.len(), 8000);
        assert!(u
            .wave
            .samples()
            .iter()
            .all(|v| v.is_finite() && v.abs() <= 1.0));
    }
}

#[test]
fn quantized_files_have_at_most_256_levels() {
    let (utts, _) = generate_corpus(&small(6)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), &utts).unwrap();
    for u in spoofs(&utts, AttackKind::Quantize) {
        assert!(distinct(u.wave.samples()) <= 256);
        let back = read_wav(&dir.path().join(format!("{}.wav", u.trial_id))).unwrap();
        assert!(distinct(back.samples()) <= 256);
    }
    let q = quantize_8bit(&[-2.0, -1.0, 0.003, 0.5, 1.0, 3.0]);
    assert_eq!(q, vec![-1.0, -1.0, 0.0, 64.0 / 127.0, 1.0, 1.0]);
}

/// Mean linear power per FFT bin over all frames.
fn mean_spectrum(u: &Utterance) -> Vec<f64> {
    let cfg = FrontEndConfig::fft();
    let fm = fft_log_power(&u.wave, &cfg).unwrap();
    (0..fm.bins())
        .map(|k| (0..fm.frames()).map(|t| fm.get(k, t).exp()).sum::<f64>() / fm.frames() as f64)
        .collect()
}

#[test]
fn bandlimited_spoofs_are_30_db_down_above_5_khz() {
    let spec = CorpusSpec {
        n_genuine: 1,
        n_spoof: 12,
        duration_s: 0.5,
        seed: 7,
        attack_kinds: vec![AttackKind::Bandlimit],
        ..CorpusSpec::default()
    };
    let (utts, _) = generate_corpus(&spec).unwrap();
    let hz_per_bin = 16000.0 / 1724.0;
    for u in spoofs(&utts, AttackKind::Bandlimit) {
        let p = mean_spectrum(u);
        let band = |lo: f64, hi: f64| {
            let bins: Vec<f64> = p
                .iter()
                .enumerate()
                .filter(|(k, _)| (lo..hi).contains(&(*k as f64 * hz_per_bin)))
                .map(|(_, v)| *v)
                .collect();
            bins.iter().sum::<f64>() / bins.len() as f64
        };
        let ratio_db = 10.0 * (band(100.0, 3000.0) / band(5000.0, 8000.0)).log10();
        assert!(ratio_db >= 30.0, "{}: {ratio_db:.1} dB", u.trial_id);
    }
}

#[test]
fn written_corpus_reads_back() {
    let (utts, protocol) = generate_corpus(&small(8)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), &utts).unwrap();
    let parsed = parse_protocol(&dir.path().join(PROTOCOL_FILE)).unwrap();
    assert_eq!(parsed.len(), protocol.len());
    for (u, r) in utts.iter().zip(&parsed) {
        assert_eq!((&u.trial_id, u.label), (&r.trial_id, r.label));
        let back = read_wav(&dir.path().join(format!("{}.wav", u.trial_id))).unwrap();
        let worst = back
            .samples()
            .iter()
            .zip(u.wave.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1.0 / 32767.0);
    }
}

#[test]
fn protocol_round_trip_of_random_records() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let records: Vec<TrialRecord> = (0..1000)
        .map(|i| {
            let label = [Label::Bonafide, Label::Spoof, Label::Unknown][rng.random_range(0..3)];
            let mut r = TrialRecord::new(
                format!("LA_{i:04}_{}", rng.random::<u32>()),
                label,
                f64::NAN,
            );
            if rng.random_bool(0.6) {
                r.attack_id = Some(format!("A{:02}", rng.random_range(1..20)));
            }
            r
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    write_protocol(&path, &records).unwrap();
    let back = parse_protocol(&path).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in records.iter().zip(&back) {
        assert_eq!(
            (&a.trial_id, a.label, &a.attack_id),
            (&b.trial_id, b.label, &b.attack_id)
        );
    }
}
