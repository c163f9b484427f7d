//! Shared fixtures for the benchmark targets.

use modescale::series::TimeSeries;
use modescale::synth;

/// Trended two-tone signal with mild roughness, shaped like the daily
/// price panels the decomposition targets.
pub fn market_like(n: usize, seed: u64) -> TimeSeries {
    let tones = synth::trended_two_tone(n);
    let noise = synth::gaussian(n, seed);
    let values = tones.iter().zip(&noise).map(|(a, b)| a + 0.1 * b).collect();
    synth::series("bench", values)
}

#[cfg(test)]
mod tests {
    use modescale::emd::{emd, SiftConfig};

    use super::*;

    #[test]
    fn fixture_decomposes() {
        let s = market_like(256, 5);
        let d = emd(&s, &SiftConfig::default()).unwrap();
        assert!(!d.imfs.is_empty());
    }
}
