//! A two-class synthetic corpus: noisy sinusoids (label 0) against Gaussian
//! white noise (label 1).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ingestion::{LabeledChunk, SetTag, TimeSeries};

/// Period range of the sinusoid class, in samples.
pub const PERIOD_RANGE: (f64, f64) = (8.0, 40.0);
/// Additive noise level of the sinusoid class relative to its amplitude.
pub const SINE_NOISE: f64 = 0.05;

/// One sinusoid chunk with random amplitude, period and phase.
pub fn sine_chunk(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    let amplitude = rng.random_range(0.5..2.0);
    let period = rng.random_range(PERIOD_RANGE.0..PERIOD_RANGE.1);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let noise = Normal::new(0.0, SINE_NOISE * amplitude).expect("positive sd");
    (0..len)
        .map(|t| amplitude * (std::f64::consts::TAU * t as f64 / period + phase).sin() + noise.sample(rng))
        .collect()
}

/// One white-noise chunk with a random standard deviation.
pub fn noise_chunk(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    let sd = rng.random_range(0.5..2.0);
    let noise = Normal::new(0.0, sd).expect("positive sd");
    (0..len).map(|_| noise.sample(rng)).collect()
}

/// `per_class` chunks of each class, interleaved (sine, noise, sine, …).
/// Sinusoids are tagged set A, noise set B.
pub fn sine_vs_noise(chunk_len: usize, per_class: usize, seed: u64) -> Vec<LabeledChunk> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * per_class);
    for i in 0..per_class {
        for (label, set_tag) in [(0u8, SetTag::A), (1u8, SetTag::B)] {
            let values = if label == 0 {
                sine_chunk(chunk_len, &mut rng)
            } else {
                noise_chunk(chunk_len, &mut rng)
            };
            let series = TimeSeries::new(values, format!("synthetic-{set_tag}-{i:04}")).expect("finite synthetic chunk");
            out.push(LabeledChunk {
                series,
                label,
                set_tag,
                chunk_index: i,
            });
        }
    }
    out
}
