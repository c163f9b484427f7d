//! Scale-by-scale OLS and the hedge/safe-haven classification.
//!
//! Each decomposition scale gets its own regression: mode j of the
//! dependent series on an intercept, its own lags, and mode j of every
//! regressor. The sign and significance of a regressor's coefficient at a
//! scale then place it in the hedge/safe-haven taxonomy for that horizon.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::emd::Decomposition;
use crate::error::{Error, Result};

/// Intercept term label.
pub const INTERCEPT: &str = "C";

/// What gets regressed on what, and how coefficients are judged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    /// Name of the dependent series.
    pub dependent: String,
    /// Regressor series names, in output order.
    pub regressors: Vec<String>,
    /// Number of lags of the dependent mode included per scale; each lag
    /// drops one leading observation.
    pub lag_dependent: usize,
    /// Significance level for the classification.
    pub alpha: f64,
    /// Use heteroskedasticity-robust (HC1) standard errors.
    pub robust_se: bool,
    /// Classification rule.
    pub taxonomy: Taxonomy,
}

impl RegressionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.regressors.is_empty() {
            return Err(Error::invalid("regression: no regressors named"));
        }
        if self.regressors.iter().any(|r| r == &self.dependent) {
            return Err(Error::invalid(format!(
                "regression: dependent {:?} also appears as a regressor",
                self.dependent
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for r in &self.regressors {
            if !seen.insert(r) {
                return Err(Error::invalid(format!(
                    "regression: regressor {r:?} listed twice"
                )));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "regression: alpha must be inside (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Classification rule for a regressor at one scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Taxonomy {
    /// Three-way split on significance and sign: an insignificant
    /// coefficient is a hedge; a significant negative one is a weak safe
    /// haven; a significant positive one is a strong safe haven.
    #[default]
    ThreeWay,
    /// Binary on-average reading: negative or insignificant is a hedge,
    /// significantly positive earns no label.
    OnAverage,
}

impl std::str::FromStr for Taxonomy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "three-way" => Ok(Taxonomy::ThreeWay),
            "on-average" => Ok(Taxonomy::OnAverage),
            other => Err(Error::invalid(format!(
                "taxonomy must be \"three-way\" or \"on-average\", got {other:?}"
            ))),
        }
    }
}

/// Role label assigned to a regressor at one scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoleLabel {
    Hedge,
    WeakSafeHaven,
    StrongSafeHaven,
    None,
}

/// One fitted equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsResult {
    /// Term labels: intercept, dependent lags, then regressors in order.
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Coefficient over standard error; absent for an exact fit whose
    /// standard errors vanish.
    pub t_stats: Vec<Option<f64>>,
    /// Two-sided p-values from the t distribution with n - k degrees of
    /// freedom; absent where the t statistic is.
    pub p_values: Vec<Option<f64>>,
    pub r_squared: f64,
    pub n_obs: usize,
    /// Whether the standard errors are heteroskedasticity-robust (HC1).
    pub robust: bool,
}

impl OlsResult {
    /// Position of a term by label.
    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }
}

/// Ordinary least squares of `y` on an intercept plus the named columns.
///
/// Standard errors are classical by default; `robust` switches them to
/// HC1. Fails on rank deficiency, naming every column that lies in the
/// span of the columns before it.
pub fn ols_fit(y: &[f64], columns: &[(String, Vec<f64>)], robust: bool) -> Result<OlsResult> {
    let n = y.len();
    let k = columns.len() + 1;
    for (name, col) in columns {
        if col.len() != n {
            return Err(Error::invalid(format!(
                "ols: column {:?} has {} rows, dependent has {}",
                name,
                col.len(),
                n
            )));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "ols: column {name:?} contains a non-finite value"
            )));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("ols: dependent contains a non-finite value"));
    }
    if n <= k + 2 {
        return Err(Error::invalid(format!(
            "ols: {n} observations cannot support {k} coefficients (need more than {})",
            k + 2
        )));
    }

    let mut terms = Vec::with_capacity(k);
    terms.push(INTERCEPT.to_string());
    for (name, _) in columns {
        terms.push(name.clone());
    }

    let mut x = DMatrix::<f64>::zeros(n, k);
    for i in 0..n {
        x[(i, 0)] = 1.0;
    }
    for (j, (_, col)) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            x[(i, j + 1)] = v;
        }
    }

    let collinear = collinear_columns(&x, &terms);
    if !collinear.is_empty() {
        return Err(Error::numerical(format!(
            "ols: design matrix is rank deficient; collinear columns: {}",
            collinear.join(", ")
        )));
    }

    let y_vec = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * &y_vec;
    let beta = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::numerical("ols: triangular solve failed"))?;

    let fitted = &x * &beta;
    let resid = &y_vec - &fitted;
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let r_squared = if tss <= 0.0 {
        0.0
    } else {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    };

    let df = (n - k) as f64;
    let xtx = x.transpose() * &x;
    let xtx_inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::numerical("ols: normal matrix is singular"))?;
    let cov = if robust {
        // HC1: sandwich with squared residuals in the meat and a small
        // sample factor n / (n - k).
        let mut meat = DMatrix::<f64>::zeros(k, k);
        for i in 0..n {
            let e2 = resid[i] * resid[i];
            for a in 0..k {
                for b in 0..k {
                    meat[(a, b)] += e2 * x[(i, a)] * x[(i, b)];
                }
            }
        }
        let scale = n as f64 / df;
        &xtx_inv * meat * &xtx_inv * scale
    } else {
        let s2 = rss / df;
        &xtx_inv * s2
    };

    let dist = StudentsT::new(0.0, 1.0, df).expect("positive dof");
    let mut coefficients = Vec::with_capacity(k);
    let mut std_errors = Vec::with_capacity(k);
    let mut t_stats = Vec::with_capacity(k);
    let mut p_values = Vec::with_capacity(k);
    for j in 0..k {
        let b = beta[j];
        let se = cov[(j, j)].max(0.0).sqrt();
        coefficients.push(b);
        std_errors.push(se);
        if se > 0.0 {
            let t = b / se;
            t_stats.push(Some(t));
            p_values.push(Some(2.0 * dist.cdf(-t.abs())));
        } else {
            t_stats.push(None);
            p_values.push(None);
        }
    }

    Ok(OlsResult {
        terms,
        coefficients,
        std_errors,
        t_stats,
        p_values,
        r_squared,
        n_obs: n,
        robust,
    })
}

/// Names every column lying in the span of the columns before it (zero
/// columns included), via modified Gram-Schmidt with re-orthogonalization.
fn collinear_columns(x: &DMatrix<f64>, terms: &[String]) -> Vec<String> {
    let n = x.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut collinear = Vec::new();
    for j in 0..x.ncols() {
        let col = DVector::from_fn(n, |i, _| x[(i, j)]);
        let norm0 = col.norm();
        if norm0 == 0.0 {
            collinear.push(terms[j].clone());
            continue;
        }
        let mut v = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v -= q * proj;
            }
        }
        if v.norm() <= 1e-10 * norm0 {
            collinear.push(terms[j].clone());
        } else {
            let norm = v.norm();
            basis.push(v / norm);
        }
    }
    collinear
}

/// One scale's regression outcome inside a multi-scale run. A failed scale
/// (rank deficiency, too few observations) does not poison its neighbors.
#[derive(Debug)]
pub struct ScaleFit {
    /// 1-based mode index this equation belongs to.
    pub imf_index: usize,
    pub fit: Result<OlsResult>,
}

/// Fits one equation per decomposition scale: mode j of the dependent on
/// an intercept, `lag_dependent` lags of itself, and mode j of every
/// regressor.
///
/// All named series must be present in `decomps` with identical calendars
/// and identical mode counts.
pub fn multiscale_fit(decomps: &[Decomposition], spec: &RegressionSpec) -> Result<Vec<ScaleFit>> {
    spec.validate()?;
    let find = |name: &str| -> Result<&Decomposition> {
        decomps.iter().find(|d| d.name == name).ok_or_else(|| {
            let have: Vec<&str> = decomps.iter().map(|d| d.name.as_str()).collect();
            Error::invalid(format!(
                "regression: no decomposition for {:?} (have: {})",
                name,
                have.join(", ")
            ))
        })
    };
    let dep = find(&spec.dependent)?;
    let mut regs = Vec::with_capacity(spec.regressors.len());
    for name in &spec.regressors {
        regs.push(find(name)?);
    }

    let mode_counts: Vec<(String, usize)> = std::iter::once(dep)
        .chain(regs.iter().copied())
        .map(|d| (d.name.clone(), d.imfs.len()))
        .collect();
    if mode_counts.iter().any(|(_, c)| *c != mode_counts[0].1) {
        let listing: Vec<String> = mode_counts
            .iter()
            .map(|(name, c)| format!("{name}: {c}"))
            .collect();
        return Err(Error::invalid(format!(
            "regression: mode counts differ across series ({})",
            listing.join(", ")
        )));
    }
    for d in std::iter::once(dep).chain(regs.iter().copied()) {
        if d.timestamps != dep.timestamps {
            return Err(Error::invalid(format!(
                "regression: {:?} and {:?} are not on the same calendar",
                dep.name, d.name
            )));
        }
    }

    let scales = mode_counts[0].1;
    let n = dep.len();
    let p = spec.lag_dependent;
    if p >= n {
        return Err(Error::invalid(format!(
            "regression: {p} lags leave no observations out of {n}"
        )));
    }

    let mut out = Vec::with_capacity(scales);
    for j in 0..scales {
        let dep_mode = &dep.imfs[j].values;
        let y = &dep_mode[p..];
        let mut columns: Vec<(String, Vec<f64>)> = Vec::with_capacity(p + regs.len());
        for lag in 1..=p {
            columns.push((
                format!("{}(-{})", spec.dependent, lag),
                dep_mode[p - lag..n - lag].to_vec(),
            ));
        }
        for reg in &regs {
            columns.push((reg.name.clone(), reg.imfs[j].values[p..].to_vec()));
        }
        out.push(ScaleFit {
            imf_index: j + 1,
            fit: ols_fit(y, &columns, spec.robust_se),
        });
    }
    Ok(out)
}

/// Inputs the classification rule saw, echoed for auditability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleInputs {
    pub coefficient: f64,
    pub p_value: Option<f64>,
    pub alpha: f64,
    pub taxonomy: Taxonomy,
}

/// A regressor's role at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleClassification {
    pub regressor: String,
    pub imf_index: usize,
    pub label: RoleLabel,
    pub rule_inputs: RuleInputs,
}

/// Classifies one regressor of a fitted equation.
///
/// An absent p-value (exact fit, vanished standard error) counts as
/// maximally significant.
pub fn classify(
    result: &OlsResult,
    regressor: &str,
    imf_index: usize,
    alpha: f64,
    taxonomy: Taxonomy,
) -> Result<ScaleClassification> {
    let idx = result.term_index(regressor).ok_or_else(|| {
        Error::invalid(format!(
            "classify: {:?} is not a term of the fitted equation ({})",
            regressor,
            result.terms.join(", ")
        ))
    })?;
    let coefficient = result.coefficients[idx];
    let p_value = result.p_values[idx];
    let p = p_value.unwrap_or(0.0);
    let label = match taxonomy {
        Taxonomy::ThreeWay => {
            if p >= alpha {
                RoleLabel::Hedge
            } else if coefficient < 0.0 {
                RoleLabel::WeakSafeHaven
            } else {
                RoleLabel::StrongSafeHaven
            }
        }
        Taxonomy::OnAverage => {
            if coefficient < 0.0 || p >= alpha {
                RoleLabel::Hedge
            } else {
                RoleLabel::None
            }
        }
    };
    Ok(ScaleClassification {
        regressor: regressor.to_string(),
        imf_index,
        label,
        rule_inputs: RuleInputs {
            coefficient,
            p_value,
            alpha,
            taxonomy,
        },
    })
}
