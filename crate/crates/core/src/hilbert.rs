//! Analytic signal and instantaneous amplitude/frequency profiles.
//!
//! The analytic signal of a real mode is built in the frequency domain:
//! positive frequencies doubled, DC and Nyquist kept, negative frequencies
//! zeroed. Its magnitude is the instantaneous amplitude; the derivative of
//! its unwrapped phase is the instantaneous frequency in cycles per sample.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Minimum length for a meaningful spectral profile.
pub const MIN_SAMPLES: usize = 8;

/// Samples at each end of a profile whose frequency estimate leans on
/// one-sided differences and envelope end effects.
pub const EDGE_SAMPLES: usize = 2;

/// Computes the analytic signal of `x` via the FFT.
///
/// The caller should pass an oscillatory, essentially zero-mean signal
/// (a decomposition mode); any DC offset shows up in the amplitude.
pub fn analytic_signal(x: &[f64]) -> Result<Vec<Complex64>> {
    let n = x.len();
    if n < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "analytic signal: need at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "analytic signal: non-finite sample at index {i}"
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward.process(&mut buf);

    // One-sided spectrum: double the strictly positive frequencies, keep
    // DC (and Nyquist for even lengths) once, drop the negative half.
    let half = n / 2;
    if n.is_multiple_of(2) {
        for value in buf.iter_mut().take(half).skip(1) {
            *value *= 2.0;
        }
        for value in buf.iter_mut().skip(half + 1) {
            *value = Complex64::new(0.0, 0.0);
        }
    } else {
        for value in buf.iter_mut().take(half + 1).skip(1) {
            *value *= 2.0;
        }
        for value in buf.iter_mut().skip(half + 1) {
            *value = Complex64::new(0.0, 0.0);
        }
    }

    inverse.process(&mut buf);
    let scale = 1.0 / n as f64;
    for value in &mut buf {
        *value *= scale;
    }
    Ok(buf)
}

/// Instantaneous amplitude and frequency of an analytic signal.
#[derive(Debug, Clone, PartialEq)]
pub struct InstantaneousProfile {
    /// Magnitude of the analytic signal; non-negative.
    pub amplitude: Vec<f64>,
    /// Phase derivative in cycles per sample: central differences in the
    /// interior, one-sided at the ends.
    pub frequency: Vec<f64>,
    /// How many samples at each end carry boundary-degraded estimates.
    pub unreliable_edge_samples: usize,
}

/// Derives amplitude and frequency from an analytic signal.
///
/// The phase is unwrapped cumulatively, so consecutive differences never
/// jump by more than half a cycle.
pub fn instantaneous_profile(z: &[Complex64]) -> InstantaneousProfile {
    let n = z.len();
    let amplitude: Vec<f64> = z.iter().map(|v| v.norm()).collect();
    if n < 2 {
        return InstantaneousProfile {
            amplitude,
            frequency: vec![0.0; n],
            unreliable_edge_samples: 0,
        };
    }
    let phase = unwrapped_phase(z);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut frequency = Vec::with_capacity(n);
    frequency.push((phase[1] - phase[0]) / two_pi);
    for t in 1..n - 1 {
        frequency.push((phase[t + 1] - phase[t - 1]) / (2.0 * two_pi));
    }
    frequency.push((phase[n - 1] - phase[n - 2]) / two_pi);
    InstantaneousProfile {
        amplitude,
        frequency,
        unreliable_edge_samples: EDGE_SAMPLES.min(n / 2),
    }
}

/// Cumulative phase of `z` with jumps folded into (-pi, pi].
fn unwrapped_phase(z: &[Complex64]) -> Vec<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut phase = Vec::with_capacity(z.len());
    let mut prev_raw = z[0].arg();
    let mut acc = prev_raw;
    phase.push(acc);
    for v in &z[1..] {
        let raw = v.arg();
        let mut delta = raw - prev_raw;
        delta -= two_pi * (delta / two_pi).round();
        acc += delta;
        phase.push(acc);
        prev_raw = raw;
    }
    phase
}
