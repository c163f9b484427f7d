//! Empirical mode decomposition by envelope sifting.
//!
//! A signal is peeled into intrinsic mode functions (IMFs): oscillatory
//! components whose zero-crossing and extremum counts differ by at most one.
//! Each sift subtracts the mean of the cubic-spline envelopes through the
//! maxima and minima; sifting repeats until the relative change between
//! iterates drops below a threshold and the count criterion holds. The
//! residue after all IMFs is the non-oscillatory trend.

use chrono::NaiveDate;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::spline::CubicSpline;

/// How envelope knots are extended past the sample boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    /// Reflect up to two extrema of each kind across each end sample, so
    /// the spline is supported beyond the boundary.
    Mirror,
    /// Add the end samples themselves as knots of both envelopes.
    ClampToEndpoints,
}

/// Cap on the number of extracted IMFs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxImfs {
    /// floor(log2(n)) - 1 for a length-n signal, the dyadic expectation,
    /// with a floor of one.
    Auto,
    Fixed(usize),
}

impl MaxImfs {
    pub fn resolve(&self, n: usize) -> usize {
        match self {
            MaxImfs::Auto => ((n as f64).log2().floor() as usize)
                .saturating_sub(1)
                .max(1),
            MaxImfs::Fixed(k) => *k,
        }
    }
}

impl Serialize for MaxImfs {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MaxImfs::Auto => serializer.serialize_str("auto"),
            MaxImfs::Fixed(k) => serializer.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for MaxImfs {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(deserializer)?;
        match raw {
            serde_json::Value::String(s) if s == "auto" => Ok(MaxImfs::Auto),
            serde_json::Value::Number(n) => n
                .as_u64()
                .filter(|&k| k >= 1)
                .map(|k| MaxImfs::Fixed(k as usize))
                .ok_or_else(|| D::Error::custom("max_imfs must be a positive integer")),
            other => Err(D::Error::custom(format!(
                "max_imfs must be \"auto\" or a positive integer, got {other}"
            ))),
        }
    }
}

impl std::str::FromStr for MaxImfs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(MaxImfs::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(MaxImfs::Fixed(k)),
            _ => Err(Error::invalid(format!(
                "max_imfs must be \"auto\" or a positive integer, got {s:?}"
            ))),
        }
    }
}

/// Parameters of the sifting loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiftConfig {
    /// Stop sifting once sum((h_prev - h)^2) / sum(h_prev^2) falls below
    /// this threshold (and the IMF count criterion holds).
    pub sd_threshold: f64,
    /// Hard cap on sift iterations per IMF; hitting it marks the IMF
    /// unconverged rather than failing.
    pub max_sift_iters: usize,
    /// Cap on extracted IMFs.
    pub max_imfs: MaxImfs,
    /// Envelope boundary handling.
    pub boundary: BoundaryPolicy,
}

impl Default for SiftConfig {
    fn default() -> Self {
        SiftConfig {
            sd_threshold: 0.2,
            max_sift_iters: 100,
            max_imfs: MaxImfs::Auto,
            boundary: BoundaryPolicy::Mirror,
        }
    }
}

impl SiftConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.sd_threshold.is_finite() || self.sd_threshold <= 0.0 {
            return Err(Error::invalid(format!(
                "sift config: sd_threshold must be positive, got {}",
                self.sd_threshold
            )));
        }
        if self.max_sift_iters == 0 {
            return Err(Error::invalid("sift config: max_sift_iters must be >= 1"));
        }
        if let MaxImfs::Fixed(0) = self.max_imfs {
            return Err(Error::invalid("sift config: max_imfs must be >= 1"));
        }
        Ok(())
    }
}

/// One intrinsic mode function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imf {
    /// Mode values, same length as the decomposed signal.
    pub values: Vec<f64>,
    /// 1-based extraction order (1 is the fastest mode).
    pub index: usize,
    /// Whether sifting met the stopping criterion before the iteration cap.
    pub converged: bool,
    /// Number of sift iterations spent on this mode.
    pub sift_iterations: usize,
}

/// Which decomposition produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Emd,
    Eemd,
}

/// Value transform applied to the series before decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    #[default]
    Levels,
    Log,
}

impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "levels" => Ok(TransformKind::Levels),
            "log" => Ok(TransformKind::Log),
            other => Err(Error::invalid(format!(
                "transform must be \"levels\" or \"log\", got {other:?}"
            ))),
        }
    }
}

/// Ensemble parameters recorded alongside an EEMD decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EemdParams {
    /// Noise level as a fraction of the sample standard deviation.
    pub noise_std: f64,
    /// Number of noise realizations averaged.
    pub ensemble_size: usize,
    /// Seed of the noise stream family.
    pub seed: u64,
}

/// Everything that parameterized a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionParams {
    pub sift: SiftConfig,
    pub eemd: Option<EemdParams>,
}

/// A complete decomposition: ordered IMFs plus the trend residue, with the
/// provenance needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Name of the decomposed series.
    pub name: String,
    /// Calendar of the decomposed series.
    pub timestamps: Vec<NaiveDate>,
    /// Modes ordered fast to slow; `imfs[j].index == j + 1`.
    pub imfs: Vec<Imf>,
    /// Trend left after removing every IMF from the signal.
    pub residue: Vec<f64>,
    pub method: Method,
    pub params: DecompositionParams,
    /// Transform that was applied to the values before decomposing.
    pub transform: TransformKind,
    /// For EEMD: how many ensemble trials produced a mode at each index.
    pub coverage: Option<Vec<usize>>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.residue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residue.is_empty()
    }

    /// Rebuilds the signal as imf1 + imf2 + ... + residue, folded in that
    /// fixed order so reruns are bit-identical.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for imf in &self.imfs {
            for (o, v) in out.iter_mut().zip(&imf.values) {
                *o += v;
            }
        }
        for (o, v) in out.iter_mut().zip(&self.residue) {
            *o += v;
        }
        out
    }
}

/// Subtracts the modes from the signal in index order. Both plain and
/// ensemble decomposition report this as the residue, so a degenerate
/// ensemble (one trial, zero noise) matches plain EMD bit for bit.
pub(crate) fn closure_residue(x: &[f64], imfs: &[Imf]) -> Vec<f64> {
    let mut residue = x.to_vec();
    for imf in imfs {
        for (r, v) in residue.iter_mut().zip(&imf.values) {
            *r -= v;
        }
    }
    residue
}

/// Extremum positions paired with their values.
pub type Extrema = Vec<(usize, f64)>;

/// Finds interior extrema with strict neighbor comparisons. A plateau of
/// equal values flanked by lower (higher) neighbors yields one maximum
/// (minimum) at the plateau's midpoint, rounded down.
///
/// Returns (maxima, minima) as (index, value) pairs. Signals shorter than 3
/// samples have no interior extrema.
pub fn find_extrema(x: &[f64]) -> (Extrema, Extrema) {
    let n = x.len();
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    if n < 3 {
        return (maxima, minima);
    }
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[j + 1] == x[i] {
            j += 1;
        }
        if i > 0 && j + 1 < n {
            let mid = (i + j) / 2;
            if x[i - 1] < x[i] && x[j + 1] < x[i] {
                maxima.push((mid, x[i]));
            } else if x[i - 1] > x[i] && x[j + 1] > x[i] {
                minima.push((mid, x[i]));
            }
        }
        i = j + 1;
    }
    (maxima, minima)
}

/// Counts strict sign changes. Zero samples carry the sign of the previous
/// non-zero sample, so a touch of zero without a sign flip does not count.
pub fn count_zero_crossings(x: &[f64]) -> usize {
    let mut crossings = 0;
    let mut prev = 0.0f64;
    for &v in x {
        let s = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            prev
        };
        if s != 0.0 && prev != 0.0 && s != prev {
            crossings += 1;
        }
        if s != 0.0 {
            prev = s;
        }
    }
    crossings
}

/// Extends extrema knots past the signal boundary per `boundary`, then
/// returns the spline envelope evaluated at every sample position.
///
/// Returns `None` when fewer than two knots exist even after extension:
/// the signal has no usable oscillation for this envelope.
pub fn envelope(x: &[f64], extrema: &[(usize, f64)], boundary: BoundaryPolicy) -> Option<Vec<f64>> {
    let n = x.len();
    if n == 0 {
        return None;
    }
    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(extrema.len() + 4);
    match boundary {
        BoundaryPolicy::Mirror => {
            if extrema.is_empty() {
                return None;
            }
            let last = (n - 1) as f64;
            // Reflect up to two leading extrema across position 0. Extrema
            // are interior (index >= 1), so reflections stay strictly left
            // of the originals and the knot order stays increasing.
            for &(p, v) in extrema.iter().take(2).rev() {
                knots.push((-(p as f64), v));
            }
            for &(p, v) in extrema {
                knots.push((p as f64, v));
            }
            for &(p, v) in extrema.iter().rev().take(2) {
                knots.push((2.0 * last - p as f64, v));
            }
        }
        BoundaryPolicy::ClampToEndpoints => {
            knots.push((0.0, x[0]));
            for &(p, v) in extrema {
                knots.push((p as f64, v));
            }
            knots.push(((n - 1) as f64, x[n - 1]));
        }
    }
    if knots.len() < 2 {
        return None;
    }
    let spline = CubicSpline::natural(&knots).ok()?;
    let positions: Vec<f64> = (0..n).map(|i| i as f64).collect();
    Some(spline.evaluate_many(&positions))
}

/// One sifting step: upper and lower envelopes through the maxima and
/// minima, their pointwise mean, and the candidate `x - mean`.
///
/// Returns `None` when the signal lacks an interior maximum or minimum, the
/// monotone-residue signal that stops extraction.
pub fn sift_once(x: &[f64], config: &SiftConfig) -> Option<SiftStep> {
    let (maxima, minima) = find_extrema(x);
    if maxima.is_empty() || minima.is_empty() {
        return None;
    }
    let upper = envelope(x, &maxima, config.boundary)?;
    let lower = envelope(x, &minima, config.boundary)?;
    let envelope_mean: Vec<f64> = upper
        .iter()
        .zip(&lower)
        .map(|(u, l)| (u + l) / 2.0)
        .collect();
    let candidate: Vec<f64> = x.iter().zip(&envelope_mean).map(|(v, m)| v - m).collect();
    Some(SiftStep {
        candidate,
        envelope_mean,
        upper,
        lower,
    })
}

/// Output of one sifting step.
#[derive(Debug, Clone)]
pub struct SiftStep {
    /// Signal minus envelope mean: the next IMF iterate.
    pub candidate: Vec<f64>,
    /// Pointwise mean of the two envelopes.
    pub envelope_mean: Vec<f64>,
    /// Envelope through the maxima.
    pub upper: Vec<f64>,
    /// Envelope through the minima.
    pub lower: Vec<f64>,
}

/// Relative squared change between consecutive sift iterates.
fn sift_sd(prev: &[f64], next: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, n) in prev.iter().zip(next) {
        let d = p - n;
        num += d * d;
        den += p * p;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// IMF count criterion: zero crossings and extrema differ by at most one.
fn counts_admissible(x: &[f64]) -> bool {
    let (maxima, minima) = find_extrema(x);
    let extrema = maxima.len() + minima.len();
    let crossings = count_zero_crossings(x);
    crossings.abs_diff(extrema) <= 1
}

/// Sifts one IMF out of `x`. Sifting stops once the relative change
/// criterion and the count criterion both hold, or at the iteration cap
/// (flagged unconverged). Returns `None` when `x` has no oscillation to
/// extract.
///
/// The returned mode carries index 1; drivers embedding it in a
/// decomposition overwrite the index with the extraction order.
pub fn extract_imf(x: &[f64], config: &SiftConfig) -> Option<Imf> {
    let mut h = x.to_vec();
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..config.max_sift_iters {
        let step = match sift_once(&h, config) {
            Some(step) => step,
            None => {
                // The iterate lost its oscillation entirely. A first-pass
                // loss means x itself was not siftable.
                if iterations == 0 {
                    return None;
                }
                converged = true;
                break;
            }
        };
        let sd = sift_sd(&h, &step.candidate);
        h = step.candidate;
        iterations += 1;
        if sd < config.sd_threshold && counts_admissible(&h) {
            converged = true;
            break;
        }
    }
    Some(Imf {
        values: h,
        index: 1,
        converged,
        sift_iterations: iterations,
    })
}

/// Decomposes values into IMFs. Extraction stops at the mode cap or when
/// the running residue has fewer than two interior extrema.
pub(crate) fn emd_values(x: &[f64], config: &SiftConfig) -> Result<Vec<Imf>> {
    config.validate()?;
    if x.len() < 4 {
        return Err(Error::invalid(format!(
            "emd: need at least 4 samples, got {}",
            x.len()
        )));
    }
    let cap = config.max_imfs.resolve(x.len());
    let mut residue = x.to_vec();
    let mut imfs: Vec<Imf> = Vec::new();
    while imfs.len() < cap {
        let (maxima, minima) = find_extrema(&residue);
        if maxima.len() + minima.len() < 2 {
            break;
        }
        match extract_imf(&residue, config) {
            None => break,
            Some(mut imf) => {
                imf.index = imfs.len() + 1;
                for (r, v) in residue.iter_mut().zip(&imf.values) {
                    *r -= v;
                }
                imfs.push(imf);
            }
        }
    }
    Ok(imfs)
}

/// Empirical mode decomposition of a series.
///
/// The reported residue is the signal minus every IMF, subtracted in index
/// order, so `reconstruct()` differs from the input only by that fold's
/// rounding.
pub fn emd(x: &TimeSeries, config: &SiftConfig) -> Result<Decomposition> {
    let imfs = emd_values(x.values(), config)?;
    let residue = closure_residue(x.values(), &imfs);
    Ok(Decomposition {
        name: x.name().to_string(),
        timestamps: x.timestamps().to_vec(),
        imfs,
        residue,
        method: Method::Emd,
        params: DecompositionParams {
            sift: *config,
            eemd: None,
        },
        transform: TransformKind::Levels,
        coverage: None,
    })
}
