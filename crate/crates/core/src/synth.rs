//! Deterministic signal builders for tests, benchmarks, and demo data.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::series::TimeSeries;

/// `amp * sin(2 pi freq t + phase)` sampled at t = 0..n.
pub fn tone(n: usize, freq: f64, amp: f64, phase: f64) -> Vec<f64> {
    (0..n)
        .map(|t| amp * (2.0 * std::f64::consts::PI * freq * t as f64 + phase).sin())
        .collect()
}

/// Unit-amplitude fast plus slow tone: frequencies 0.25 and 0.03 cycles
/// per sample.
pub fn two_tone(n: usize) -> Vec<f64> {
    let fast = tone(n, 0.25, 1.0, 0.0);
    let slow = tone(n, 0.03, 1.0, 0.0);
    fast.iter().zip(&slow).map(|(a, b)| a + b).collect()
}

/// Two tones riding on a gentle linear trend.
pub fn trended_two_tone(n: usize) -> Vec<f64> {
    two_tone(n)
        .iter()
        .enumerate()
        .map(|(t, v)| v + 0.01 * t as f64)
        .collect()
}

/// Linear sweep from frequency `f0` to `f1` over the sample window.
pub fn chirp(n: usize, f0: f64, f1: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64;
            let phase =
                2.0 * std::f64::consts::PI * (f0 * t + (f1 - f0) * t * t / (2.0 * n as f64));
            phase.sin()
        })
        .collect()
}

/// Standard normal draws from a fixed stream.
pub fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// A slow tone with a high-frequency burst confined to the middle fifth of
/// the window; the classic intermittency signal that makes plain sifting
/// mix modes.
pub fn burst_on_slow_tone(n: usize) -> Vec<f64> {
    let slow = tone(n, 0.02, 1.0, 0.0);
    let lo = 2 * n / 5;
    let hi = 3 * n / 5;
    slow.iter()
        .enumerate()
        .map(|(t, v)| {
            if t >= lo && t < hi {
                v + 0.4 * (2.0 * std::f64::consts::PI * 0.3 * t as f64).sin()
            } else {
                *v
            }
        })
        .collect()
}

/// Wraps values in a series on consecutive days starting 2020-01-01.
pub fn series(name: &str, values: Vec<f64>) -> TimeSeries {
    let start: NaiveDate = "2020-01-01".parse().unwrap();
    let dates: Vec<NaiveDate> = (0..values.len())
        .map(|i| start + chrono::Days::new(i as u64))
        .collect();
    TimeSeries::new(name, dates, values).expect("synthetic series is valid")
}

/// Wraps values in a series on consecutive days from an explicit start.
pub fn series_from(name: &str, start: NaiveDate, values: Vec<f64>) -> TimeSeries {
    let dates: Vec<NaiveDate> = (0..values.len())
        .map(|i| start + chrono::Days::new(i as u64))
        .collect();
    TimeSeries::new(name, dates, values).expect("synthetic series is valid")
}
