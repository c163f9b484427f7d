//! Per-mode descriptive statistics: mean oscillation period, correlation of
//! each mode with the original series (Pearson and Kendall tau-b with
//! p-values), variance shares, and horizon grouping.
//!
//! Undefined statistics (no peaks, constant inputs, all-tied ranks) are
//! reported as absent values, never fabricated.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::emd::{find_extrema, Decomposition};
use crate::error::{Error, Result};

/// Mean oscillation period of a mode: length divided by the count of local
/// maxima. `None` when the mode has no interior maximum.
pub fn mean_period(values: &[f64]) -> Option<f64> {
    let (maxima, _) = find_extrema(values);
    if maxima.is_empty() {
        None
    } else {
        Some(values.len() as f64 / maxima.len() as f64)
    }
}

fn check_paired(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "{what}: length mismatch ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 3 {
        return Err(Error::invalid(format!(
            "{what}: need at least 3 paired observations, got {}",
            a.len()
        )));
    }
    Ok(())
}

/// Product-moment correlation. `Ok(None)` when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_paired(a, b, "pearson")?;
    Ok(pearson_inner(a, b).map(|(r, _, _)| r))
}

/// Pearson correlation with a two-sided p-value from the t approximation
/// with n - 2 degrees of freedom.
pub fn pearson_test(a: &[f64], b: &[f64]) -> Result<Option<(f64, f64)>> {
    check_paired(a, b, "pearson")?;
    let n = a.len() as f64;
    Ok(pearson_inner(a, b).map(|(r, _, _)| {
        let denom = 1.0 - r * r;
        let p = if denom <= 0.0 {
            0.0
        } else {
            let t = r * ((n - 2.0) / denom).sqrt();
            let dist = StudentsT::new(0.0, 1.0, n - 2.0).expect("valid dof");
            2.0 * dist.cdf(-t.abs())
        };
        (r, p)
    }))
}

fn pearson_inner(a: &[f64], b: &[f64]) -> Option<(f64, f64, f64)> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        let da = x - mean_a;
        let db = y - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a <= 0.0 || var_b <= 0.0 {
        return None;
    }
    let r = (cov / (var_a * var_b).sqrt()).clamp(-1.0, 1.0);
    Some((r, var_a, var_b))
}

/// Tie-aware pair counts shared by the tau-b estimate and its variance.
struct KendallCounts {
    /// Total pairs n(n-1)/2.
    n0: u64,
    /// Pairs tied in the first variable (including double ties).
    tied_a: u64,
    /// Pairs tied in the second variable (including double ties).
    tied_b: u64,
    /// Concordant minus discordant pairs.
    s: i64,
    /// Tie-run sums for the variance: sum t(t-1)(2t+5) per variable.
    vt_a: u64,
    vt_b: u64,
    /// Tie-run sums t(t-1) and t(t-1)(t-2) per variable.
    v1_a: u64,
    v1_b: u64,
    v2_a: u64,
    v2_b: u64,
}

fn tie_runs(sorted: &[f64]) -> (u64, u64, u64, u64) {
    let mut pairs = 0u64;
    let mut vt = 0u64;
    let mut v1 = 0u64;
    let mut v2 = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as u64;
        if t > 1 {
            pairs += t * (t - 1) / 2;
            vt += t * (t - 1) * (2 * t + 5);
            v1 += t * (t - 1);
            v2 += t * (t - 1) * (t - 2);
        }
        i = j + 1;
    }
    (pairs, vt, v1, v2)
}

/// Counts strict descents among `values` with a merge sort; pairs of equal
/// values are not descents.
fn merge_count_inversions(values: &mut [f64]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mut buf = values.to_vec();
    let mut inversions = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo + width < n {
            let mid = lo + width;
            let hi = (mid + width).min(n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                if values[i] <= values[j] {
                    buf[k] = values[i];
                    i += 1;
                } else {
                    inversions += (mid - i) as u64;
                    buf[k] = values[j];
                    j += 1;
                }
                k += 1;
            }
            while i < mid {
                buf[k] = values[i];
                i += 1;
                k += 1;
            }
            while j < hi {
                buf[k] = values[j];
                j += 1;
                k += 1;
            }
            values[lo..hi].copy_from_slice(&buf[lo..hi]);
            lo = hi;
        }
        width *= 2;
    }
    inversions
}

fn kendall_counts(a: &[f64], b: &[f64]) -> KendallCounts {
    let n = a.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(b[i].total_cmp(&b[j])));
    let sorted_a: Vec<f64> = order.iter().map(|&i| a[i]).collect();
    let mut ys: Vec<f64> = order.iter().map(|&i| b[i]).collect();

    let (tied_a, vt_a, v1_a, v2_a) = tie_runs(&sorted_a);

    // Pairs tied in both variables: runs of identical (a, b) in the sorted
    // order. They are not discordant (ys ascend within an a-run), but they
    // inflate tied_a and tied_b symmetric counts, so count them separately.
    let mut tied_both = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted_a[j + 1] == sorted_a[i] && ys[j + 1] == ys[i] {
            j += 1;
        }
        let t = (j - i + 1) as u64;
        tied_both += t * (t - 1) / 2;
        i = j + 1;
    }

    let discordant = merge_count_inversions(&mut ys);
    // `ys` is now sorted; reuse it for the b-side tie runs.
    let (tied_b, vt_b, v1_b, v2_b) = tie_runs(&ys);

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let concordant = n0 - tied_a - tied_b + tied_both - discordant;
    KendallCounts {
        n0,
        tied_a,
        tied_b,
        s: concordant as i64 - discordant as i64,
        vt_a,
        vt_b,
        v1_a,
        v1_b,
        v2_a,
        v2_b,
    }
}

/// Kendall rank correlation tau-b, tie-corrected. `Ok(None)` when either
/// input is entirely tied.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_paired(a, b, "kendall")?;
    let c = kendall_counts(a, b);
    Ok(tau_from_counts(&c))
}

fn tau_from_counts(c: &KendallCounts) -> Option<f64> {
    if c.n0 == c.tied_a || c.n0 == c.tied_b {
        return None;
    }
    let denom = (((c.n0 - c.tied_a) as f64) * ((c.n0 - c.tied_b) as f64)).sqrt();
    Some(c.s as f64 / denom)
}

/// Kendall tau-b with a two-sided p-value from the normal approximation
/// with tie-adjusted variance.
pub fn kendall_tau_test(a: &[f64], b: &[f64]) -> Result<Option<(f64, f64)>> {
    check_paired(a, b, "kendall")?;
    let n = a.len() as f64;
    let c = kendall_counts(a, b);
    let tau = match tau_from_counts(&c) {
        Some(tau) => tau,
        None => return Ok(None),
    };
    let v0 = n * (n - 1.0) * (2.0 * n + 5.0);
    let var_s = (v0 - c.vt_a as f64 - c.vt_b as f64) / 18.0
        + (c.v1_a as f64 * c.v1_b as f64) / (2.0 * n * (n - 1.0))
        + (c.v2_a as f64 * c.v2_b as f64) / (9.0 * n * (n - 1.0) * (n - 2.0));
    if var_s <= 0.0 {
        return Ok(None);
    }
    let z = c.s as f64 / var_s.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = 2.0 * normal.cdf(-z.abs());
    Ok(Some((tau, p)))
}

/// Percentage of total mode variance carried by each mode. The residue is
/// not part of the denominator. `None` when there are no modes or every
/// mode is constant.
pub fn variance_share(decomp: &Decomposition) -> Option<Vec<f64>> {
    if decomp.imfs.is_empty() {
        return None;
    }
    let variances: Vec<f64> = decomp
        .imfs
        .iter()
        .map(|imf| {
            let n = imf.values.len() as f64;
            let mean = imf.values.iter().sum::<f64>() / n;
            imf.values
                .iter()
                .map(|v| (v - mean) * (v - mean))
                .sum::<f64>()
                / n
        })
        .collect();
    let total: f64 = variances.iter().sum();
    if total <= 0.0 {
        return None;
    }
    Some(variances.iter().map(|v| v / total * 100.0).collect())
}

/// Investment horizon bucket of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    Short,
    Medium,
    Long,
}

/// How modes are assigned to horizons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorizonRule {
    /// By extraction order: the two fastest modes are short run, the
    /// slowest is long run, everything between is medium run.
    #[default]
    ByIndex,
    /// By mean period, in samples: at most `short_max` is short run, above
    /// `long_min` is long run, between is medium run. Modes with no
    /// period (no peaks) group as long run.
    ByMeanPeriod { short_max: f64, long_min: f64 },
}

/// Default period bounds for [`HorizonRule::ByMeanPeriod`]: two trading
/// weeks and twelve trading weeks of daily samples.
pub const PERIOD_SHORT_MAX: f64 = 10.0;
pub const PERIOD_LONG_MIN: f64 = 60.0;

/// Horizon of mode `imf_index` out of `total` by extraction order.
///
/// With three or more modes, indexes 1 and 2 are short run, the last is
/// long run, the rest are medium run. With two modes the first is short
/// and the second long; a lone mode is long run.
pub fn horizon_group(imf_index: usize, total: usize) -> Result<Horizon> {
    if imf_index == 0 || imf_index > total {
        return Err(Error::invalid(format!(
            "horizon: mode index {imf_index} out of range 1..={total}"
        )));
    }
    if imf_index == total {
        return Ok(Horizon::Long);
    }
    if total >= 3 {
        if imf_index <= 2 {
            Ok(Horizon::Short)
        } else {
            Ok(Horizon::Medium)
        }
    } else {
        Ok(Horizon::Short)
    }
}

/// Horizon of a mode by its mean period in samples.
pub fn horizon_by_period(period: f64, short_max: f64, long_min: f64) -> Horizon {
    if period <= short_max {
        Horizon::Short
    } else if period > long_min {
        Horizon::Long
    } else {
        Horizon::Medium
    }
}

/// One row of the per-mode feature table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImfFeatureRow {
    pub imf_index: usize,
    pub mean_period: Option<f64>,
    pub pearson: Option<f64>,
    pub pearson_p: Option<f64>,
    pub kendall: Option<f64>,
    pub kendall_p: Option<f64>,
    pub variance_share: Option<f64>,
    pub horizon: Horizon,
}

/// Feature rows for every mode of a decomposition, plus a note when the
/// table is degenerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub series: String,
    pub rows: Vec<ImfFeatureRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Builds the per-mode feature table. Correlations are taken against the
/// reconstructed original series.
pub fn feature_table(decomp: &Decomposition, rule: HorizonRule) -> Result<FeatureTable> {
    let original = decomp.reconstruct();
    let total = decomp.imfs.len();
    if total == 0 {
        return Ok(FeatureTable {
            series: decomp.name.clone(),
            rows: Vec::new(),
            note: Some("no oscillatory modes: the signal reduces to its trend residue".to_string()),
        });
    }
    let shares = variance_share(decomp);
    let mut rows = Vec::with_capacity(total);
    for (j, imf) in decomp.imfs.iter().enumerate() {
        let period = mean_period(&imf.values);
        let pearson_pair = pearson_test(&imf.values, &original)?;
        let kendall_pair = kendall_tau_test(&imf.values, &original)?;
        let horizon = match rule {
            HorizonRule::ByIndex => horizon_group(j + 1, total)?,
            HorizonRule::ByMeanPeriod {
                short_max,
                long_min,
            } => match period {
                Some(p) => horizon_by_period(p, short_max, long_min),
                None => Horizon::Long,
            },
        };
        rows.push(ImfFeatureRow {
            imf_index: j + 1,
            mean_period: period,
            pearson: pearson_pair.map(|(r, _)| r),
            pearson_p: pearson_pair.map(|(_, p)| p),
            kendall: kendall_pair.map(|(t, _)| t),
            kendall_p: kendall_pair.map(|(_, p)| p),
            variance_share: shares.as_ref().map(|s| s[j]),
            horizon,
        });
    }
    Ok(FeatureTable {
        series: decomp.name.clone(),
        rows,
        note: None,
    })
}
