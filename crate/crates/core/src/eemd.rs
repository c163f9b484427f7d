//! Ensemble empirical mode decomposition.
//!
//! Plain sifting lets unrelated scales share one mode when oscillation is
//! intermittent. The ensemble variant decomposes many noise-perturbed
//! copies of the signal and averages modes across trials: added white noise
//! populates every scale, pinning each mode to its dyadic band, and
//! averaging cancels the noise itself.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::emd::{closure_residue, emd_values};
use crate::emd::{
    Decomposition, DecompositionParams, EemdParams, Imf, Method, SiftConfig, TransformKind,
};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Ensemble parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EemdConfig {
    /// Noise level as a fraction of the signal's sample standard deviation.
    /// Zero makes every trial identical to plain EMD.
    pub noise_std: f64,
    /// Number of noise realizations.
    pub ensemble_size: usize,
    /// Seed of the noise stream family; trial `i` draws from an
    /// independent stream derived from `(seed, i)`.
    pub seed: u64,
    /// Sifting parameters shared by all trials.
    pub sift: SiftConfig,
}

impl Default for EemdConfig {
    fn default() -> Self {
        EemdConfig {
            noise_std: 0.2,
            ensemble_size: 100,
            seed: 42,
            sift: SiftConfig::default(),
        }
    }
}

impl EemdConfig {
    pub fn validate(&self) -> Result<()> {
        self.sift.validate()?;
        if !self.noise_std.is_finite() || self.noise_std < 0.0 {
            return Err(Error::invalid(format!(
                "eemd config: noise_std must be non-negative, got {}",
                self.noise_std
            )));
        }
        if self.ensemble_size == 0 {
            return Err(Error::invalid("eemd config: ensemble_size must be >= 1"));
        }
        Ok(())
    }
}

/// The random stream a given trial draws its noise from. Streams for
/// different trial indices are independent; the same `(seed, trial)` pair
/// always yields the same stream.
pub fn trial_stream(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws `length` independent Gaussian samples with standard deviation
/// `std` from `rng`.
pub fn generate_noise(length: usize, std: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..length)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * std
        })
        .collect()
}

fn sample_std(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Ensemble empirical mode decomposition of a series.
///
/// Each trial adds white noise scaled by `noise_std` times the sample
/// standard deviation of the input, decomposes the sum, and the trial modes
/// are averaged index by index. Trials producing fewer modes than the
/// longest trial contribute zeros at the missing trailing indexes; the sum
/// is divided by the full ensemble size either way, and per-index trial
/// coverage is recorded. The reported residue closes the decomposition:
/// input minus every averaged mode.
///
/// Trials are independent and run in parallel; results depend only on
/// `(seed, trial index)`, never on scheduling.
pub fn eemd(x: &TimeSeries, config: &EemdConfig) -> Result<Decomposition> {
    config.validate()?;
    if x.len() < 4 {
        return Err(Error::invalid(format!(
            "eemd: need at least 4 samples, got {}",
            x.len()
        )));
    }
    let n = x.len();
    let scale = config.noise_std * sample_std(x.values());
    let trials: Vec<Result<Vec<Imf>>> = (0..config.ensemble_size)
        .into_par_iter()
        .map(|trial| {
            let perturbed = if scale > 0.0 {
                let mut rng = trial_stream(config.seed, trial as u64);
                let noise = generate_noise(n, scale, &mut rng);
                x.values()
                    .iter()
                    .zip(&noise)
                    .map(|(v, e)| v + e)
                    .collect::<Vec<f64>>()
            } else {
                x.values().to_vec()
            };
            emd_values(&perturbed, &config.sift)
        })
        .collect();

    let mut per_trial: Vec<Vec<Imf>> = Vec::with_capacity(trials.len());
    for (trial, outcome) in trials.into_iter().enumerate() {
        match outcome {
            Ok(imfs) => per_trial.push(imfs),
            Err(e) => return Err(Error::numerical(format!("eemd: trial {trial} failed: {e}"))),
        }
    }

    let mode_count = per_trial.iter().map(|t| t.len()).max().unwrap_or(0);
    let ne = config.ensemble_size as f64;
    let mut imfs: Vec<Imf> = Vec::with_capacity(mode_count);
    let mut coverage: Vec<usize> = Vec::with_capacity(mode_count);
    for j in 0..mode_count {
        let mut mean = vec![0.0f64; n];
        let mut hits = 0usize;
        let mut all_converged = true;
        // Trials are folded in index order so the average is reproducible
        // bit for bit regardless of how the pool scheduled them.
        for trial in &per_trial {
            if let Some(imf) = trial.get(j) {
                hits += 1;
                all_converged &= imf.converged;
                for (m, v) in mean.iter_mut().zip(&imf.values) {
                    *m += v;
                }
            }
        }
        for m in &mut mean {
            *m /= ne;
        }
        coverage.push(hits);
        imfs.push(Imf {
            values: mean,
            index: j + 1,
            converged: all_converged,
            // Iteration counts are per trial; the ensemble average has none.
            sift_iterations: 0,
        });
    }

    let residue = closure_residue(x.values(), &imfs);
    Ok(Decomposition {
        name: x.name().to_string(),
        timestamps: x.timestamps().to_vec(),
        imfs,
        residue,
        method: Method::Eemd,
        params: DecompositionParams {
            sift: config.sift,
            eemd: Some(EemdParams {
                noise_std: config.noise_std,
                ensemble_size: config.ensemble_size,
                seed: config.seed,
            }),
        },
        transform: TransformKind::Levels,
        coverage: Some(coverage),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emd::emd;
    use crate::synth;

    #[test]
    fn noise_streams_are_reproducible() {
        let mut a = trial_stream(7, 3);
        let mut b = trial_stream(7, 3);
        let na = generate_noise(64, 0.5, &mut a);
        let nb = generate_noise(64, 0.5, &mut b);
        assert_eq!(na, nb);
    }

    #[test]
    fn noise_streams_differ_across_trials() {
        let mut a = trial_stream(7, 0);
        let mut b = trial_stream(7, 1);
        let na = generate_noise(64, 0.5, &mut a);
        let nb = generate_noise(64, 0.5, &mut b);
        assert_ne!(na, nb);
    }

    #[test]
    fn noise_matches_requested_scale() {
        let mut rng = trial_stream(11, 0);
        let noise = generate_noise(20_000, 2.5, &mut rng);
        let std = sample_std(&noise);
        assert!((std - 2.5).abs() < 0.05, "sample std {std}");
    }

    #[test]
    fn degenerate_ensemble_equals_plain_emd_bitwise() {
        let s = synth::series("mix", synth::trended_two_tone(256));
        let config = EemdConfig {
            noise_std: 0.0,
            ensemble_size: 1,
            seed: 9,
            sift: SiftConfig::default(),
        };
        let ensemble = eemd(&s, &config).unwrap();
        let plain = emd(&s, &config.sift).unwrap();
        assert_eq!(ensemble.imfs.len(), plain.imfs.len());
        for (a, b) in ensemble.imfs.iter().zip(&plain.imfs) {
            for (u, v) in a.values.iter().zip(&b.values) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
        }
        for (u, v) in ensemble.residue.iter().zip(&plain.residue) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn zero_noise_many_trials_still_matches_emd_closely() {
        let s = synth::series("mix", synth::two_tone(128));
        let config = EemdConfig {
            noise_std: 0.0,
            ensemble_size: 7,
            seed: 1,
            sift: SiftConfig::default(),
        };
        let ensemble = eemd(&s, &config).unwrap();
        let plain = emd(&s, &config.sift).unwrap();
        assert_eq!(ensemble.imfs.len(), plain.imfs.len());
        for (a, b) in ensemble.imfs.iter().zip(&plain.imfs) {
            for (u, v) in a.values.iter().zip(&b.values) {
                assert!((u - v).abs() <= 1e-14 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn same_seed_reproduces_same_decomposition() {
        let s = synth::series("mix", synth::trended_two_tone(128));
        let config = EemdConfig {
            ensemble_size: 16,
            ..EemdConfig::default()
        };
        let a = eemd(&s, &config).unwrap();
        let b = eemd(&s, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let s = synth::series("mix", synth::trended_two_tone(128));
        let a = eemd(
            &s,
            &EemdConfig {
                seed: 1,
                ensemble_size: 8,
                ..EemdConfig::default()
            },
        )
        .unwrap();
        let b = eemd(
            &s,
            &EemdConfig {
                seed: 2,
                ensemble_size: 8,
                ..EemdConfig::default()
            },
        )
        .unwrap();
        assert_ne!(a.imfs[0].values, b.imfs[0].values);
    }

    #[test]
    fn coverage_counts_trials_per_mode() {
        let s = synth::series("mix", synth::trended_two_tone(200));
        let config = EemdConfig {
            ensemble_size: 12,
            ..EemdConfig::default()
        };
        let d = eemd(&s, &config).unwrap();
        let coverage = d.coverage.as_ref().unwrap();
        assert_eq!(coverage.len(), d.imfs.len());
        assert!(coverage.iter().all(|&c| (1..=12).contains(&c)));
        assert_eq!(coverage[0], 12, "every trial produces a fastest mode");
        for w in coverage.windows(2) {
            assert!(w[1] <= w[0], "coverage never grows with mode index");
        }
    }

    #[test]
    fn closure_holds_exactly() {
        let s = synth::series("mix", synth::trended_two_tone(160));
        let config = EemdConfig {
            ensemble_size: 10,
            ..EemdConfig::default()
        };
        let d = eemd(&s, &config).unwrap();
        let recon = d.reconstruct();
        // The residue is defined as the signal minus every mode, so the
        // rebuild can only drift by the rounding of the final re-summation:
        // a few ulp, orders below the plain-sift leakage budget.
        let max_abs = s.values().iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        for (a, b) in recon.iter().zip(s.values()) {
            assert!(
                (a - b).abs() <= 1e-13 * max_abs,
                "closure residue drifted: {a} vs {b}"
            );
        }
    }

    #[test]
    fn rejects_zero_ensemble() {
        let s = synth::series("x", synth::two_tone(64));
        let config = EemdConfig {
            ensemble_size: 0,
            ..EemdConfig::default()
        };
        assert!(eemd(&s, &config).is_err());
    }

    #[test]
    fn rejects_negative_noise() {
        let s = synth::series("x", synth::two_tone(64));
        let config = EemdConfig {
            noise_std: -0.1,
            ..EemdConfig::default()
        };
        assert!(eemd(&s, &config).is_err());
    }

    #[test]
    fn noise_assist_separates_intermittent_burst() {
        // With an intermittent high-frequency burst, plain sifting lets the
        // burst and the carrier share the first mode; the interior of the
        // first ensemble mode instead stays quiet outside the burst window.
        let n = 512;
        let x = synth::burst_on_slow_tone(n);
        let s = synth::series("burst", x);
        let config = EemdConfig {
            ensemble_size: 50,
            noise_std: 0.2,
            seed: 3,
            sift: SiftConfig::default(),
        };
        let ensemble = eemd(&s, &config).unwrap();
        let first = &ensemble.imfs[0].values;
        // Outside the burst (plus margin), the first mode holds noise
        // remnants only: small next to the 0.4 burst amplitude.
        let quiet: f64 =
            first[50..n * 2 / 5 - 20].iter().map(|v| v * v).sum::<f64>() / (n * 2 / 5 - 70) as f64;
        let busy: f64 = first[n * 2 / 5 + 10..n * 3 / 5 - 10]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            / (n / 5 - 20) as f64;
        assert!(
            busy > 4.0 * quiet,
            "burst energy {busy} should dominate quiet energy {quiet}"
        );
    }

    #[test]
    fn larger_ensembles_attenuate_residual_noise() {
        // The ensemble mean carries Monte Carlo noise that shrinks with
        // trial count: two ensembles differing only in seed agree far more
        // closely at 64 trials than at 4 (expected ratio ~ 1/4).
        let n = 256;
        let s = synth::series("two", synth::two_tone(n));
        let spread_at = |ne: usize| {
            let run = |seed: u64| {
                let config = EemdConfig {
                    ensemble_size: ne,
                    noise_std: 0.3,
                    seed,
                    sift: SiftConfig::default(),
                };
                eemd(&s, &config).unwrap()
            };
            let a = run(17);
            let b = run(41);
            a.imfs[0]
                .values
                .iter()
                .zip(&b.imfs[0].values)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt()
        };
        let small = spread_at(4);
        let large = spread_at(64);
        assert!(
            large < 0.6 * small,
            "seed-to-seed spread should shrink with ensemble size: {large} vs {small}"
        );
    }
}
