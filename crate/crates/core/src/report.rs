//! File formats for every artifact: decomposition CSV plus JSON sidecar,
//! feature tables, regression reports, spectral profiles, and plot data.
//!
//! All numeric CSV cells use shortest round-trip formatting unless a file
//! is explicitly presentational, so identical runs produce identical bytes
//! and decompositions survive a write/read cycle bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::emd::{Decomposition, DecompositionParams, Imf, Method, SiftConfig, TransformKind};
use crate::error::{Error, Result};
use crate::hilbert::{analytic_signal, instantaneous_profile};
use crate::metrics::FeatureTable;
use crate::regression::{classify, RegressionSpec, ScaleClassification, ScaleFit};
use crate::series::TimeSeries;

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))
}

/// First and last date of a decomposed window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// Per-mode convergence record in the sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub imf_index: usize,
    pub converged: bool,
    pub sift_iterations: usize,
}

/// Reproducibility metadata stored next to a decomposition CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSidecar {
    pub name: String,
    pub method: Method,
    pub transform: TransformKind,
    pub length: usize,
    pub window: Window,
    pub params: DecompositionParams,
    pub convergence: Vec<ConvergenceEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<Vec<usize>>,
}

impl DecompositionSidecar {
    pub fn of(d: &Decomposition) -> Self {
        DecompositionSidecar {
            name: d.name.clone(),
            method: d.method,
            transform: d.transform,
            length: d.len(),
            window: Window {
                start: d.timestamps[0],
                end: *d.timestamps.last().unwrap(),
            },
            params: d.params.clone(),
            convergence: d
                .imfs
                .iter()
                .map(|imf| ConvergenceEntry {
                    imf_index: imf.index,
                    converged: imf.converged,
                    sift_iterations: imf.sift_iterations,
                })
                .collect(),
            coverage: d.coverage.clone(),
        }
    }
}

/// Writes mode values as CSV: `t` (ISO date), `imf1`..`imfK`, `residue`.
pub fn write_decomposition_csv(d: &Decomposition, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("t");
    for imf in &d.imfs {
        write!(out, ",imf{}", imf.index).expect("string write");
    }
    out.push_str(",residue\n");
    for (i, date) in d.timestamps.iter().enumerate() {
        write!(out, "{date}").expect("string write");
        for imf in &d.imfs {
            write!(out, ",{}", imf.values[i]).expect("string write");
        }
        writeln!(out, ",{}", d.residue[i]).expect("string write");
    }
    write_text(path.as_ref(), &out)
}

/// Writes the JSON sidecar carrying method, parameters, seed, convergence
/// flags, and (for ensembles) per-mode coverage.
pub fn write_decomposition_sidecar(d: &Decomposition, path: impl AsRef<Path>) -> Result<()> {
    let sidecar = DecompositionSidecar::of(d);
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    write_text(path.as_ref(), &text)
}

/// Reads a decomposition back from its CSV and sidecar. Values round-trip
/// bit for bit; mode metadata comes from the sidecar.
pub fn read_decomposition(
    csv_path: impl AsRef<Path>,
    sidecar_path: impl AsRef<Path>,
) -> Result<Decomposition> {
    let csv_path = csv_path.as_ref();
    let sidecar: DecompositionSidecar = serde_json::from_str(&read_text(sidecar_path.as_ref())?)?;

    let text = read_text(csv_path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid(format!("{}: empty file", csv_path.display())))?;
    let names: Vec<&str> = header.split(',').collect();
    if names.first() != Some(&"t") || names.last() != Some(&"residue") || names.len() < 2 {
        return Err(Error::invalid(format!(
            "{}: expected header t,imf1,...,residue, got {header:?}",
            csv_path.display()
        )));
    }
    let mode_count = names.len() - 2;
    for (j, name) in names[1..1 + mode_count].iter().enumerate() {
        let expected = format!("imf{}", j + 1);
        if *name != expected {
            return Err(Error::invalid(format!(
                "{}: expected column {expected:?} at position {}, got {name:?}",
                csv_path.display(),
                j + 1
            )));
        }
    }
    if sidecar.convergence.len() != mode_count {
        return Err(Error::invalid(format!(
            "{}: {} mode columns but sidecar describes {}",
            csv_path.display(),
            mode_count,
            sidecar.convergence.len()
        )));
    }

    let mut timestamps = Vec::new();
    let mut modes: Vec<Vec<f64>> = vec![Vec::new(); mode_count];
    let mut residue = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() {
            return Err(Error::invalid(format!(
                "{}: row {row} has {} cells, expected {}",
                csv_path.display(),
                cells.len(),
                names.len()
            )));
        }
        let date: NaiveDate = cells[0].parse().map_err(|_| {
            Error::invalid(format!(
                "{}: unparseable date {:?} at row {row}",
                csv_path.display(),
                cells[0]
            ))
        })?;
        timestamps.push(date);
        for (j, mode) in modes.iter_mut().enumerate() {
            mode.push(parse_cell(cells[j + 1], csv_path, row)?);
        }
        residue.push(parse_cell(cells[mode_count + 1], csv_path, row)?);
    }
    if residue.len() != sidecar.length {
        return Err(Error::invalid(format!(
            "{}: {} rows but sidecar says {}",
            csv_path.display(),
            residue.len(),
            sidecar.length
        )));
    }

    let imfs: Vec<Imf> = modes
        .into_iter()
        .zip(&sidecar.convergence)
        .map(|(values, entry)| Imf {
            values,
            index: entry.imf_index,
            converged: entry.converged,
            sift_iterations: entry.sift_iterations,
        })
        .collect();
    Ok(Decomposition {
        name: sidecar.name,
        timestamps,
        imfs,
        residue,
        method: sidecar.method,
        params: sidecar.params,
        transform: sidecar.transform,
        coverage: sidecar.coverage,
    })
}

fn parse_cell(cell: &str, path: &Path, row: usize) -> Result<f64> {
    cell.parse().map_err(|_| {
        Error::invalid(format!(
            "{}: non-numeric value {:?} at row {row}",
            path.display(),
            cell
        ))
    })
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes a feature table as CSV, one row per mode. Absent statistics are
/// empty cells; a degenerate table carries its note as a comment line.
pub fn write_feature_table_csv(table: &FeatureTable, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from(
        "imf_index,mean_period,pearson,pearson_p,kendall,kendall_p,variance_share,horizon\n",
    );
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.imf_index,
            opt_cell(row.mean_period),
            opt_cell(row.pearson),
            opt_cell(row.pearson_p),
            opt_cell(row.kendall),
            opt_cell(row.kendall_p),
            opt_cell(row.variance_share),
            serde_json::to_value(row.horizon)?
                .as_str()
                .expect("horizon serializes to a string"),
        )
        .expect("string write");
    }
    if let Some(note) = &table.note {
        writeln!(out, "# note: {note}").expect("string write");
    }
    write_text(path.as_ref(), &out)
}

/// Writes a feature table as JSON.
pub fn write_feature_table_json(table: &FeatureTable, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(table)?;
    text.push('\n');
    write_text(path.as_ref(), &text)
}

/// One scale's entry in the regression report.
#[derive(Debug, Serialize, Deserialize)]
pub struct ScaleReport {
    pub imf_index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ols: Option<crate::regression::OlsResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub classifications: Vec<ScaleClassification>,
}

/// Full multi-scale regression output: one entry per mode index plus the
/// spec that produced it.
#[derive(Debug, Serialize, Deserialize)]
pub struct RegressionReport {
    pub spec: RegressionSpec,
    pub scales: Vec<ScaleReport>,
}

/// Assembles the report: classifies every named regressor on each scale
/// that fitted, and records the error on each scale that did not.
pub fn build_regression_report(
    fits: &[ScaleFit],
    spec: &RegressionSpec,
) -> Result<RegressionReport> {
    let mut scales = Vec::with_capacity(fits.len());
    for scale in fits {
        match &scale.fit {
            Ok(ols) => {
                let mut classifications = Vec::with_capacity(spec.regressors.len());
                for regressor in &spec.regressors {
                    classifications.push(classify(
                        ols,
                        regressor,
                        scale.imf_index,
                        spec.alpha,
                        spec.taxonomy,
                    )?);
                }
                scales.push(ScaleReport {
                    imf_index: scale.imf_index,
                    ols: Some(ols.clone()),
                    error: None,
                    classifications,
                });
            }
            Err(e) => scales.push(ScaleReport {
                imf_index: scale.imf_index,
                ols: None,
                error: Some(e.to_string()),
                classifications: Vec::new(),
            }),
        }
    }
    Ok(RegressionReport {
        spec: spec.clone(),
        scales,
    })
}

/// Writes the regression report as JSON.
pub fn write_regression_report_json(
    report: &RegressionReport,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    write_text(path.as_ref(), &text)
}

fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// Writes the presentational regression table: rows are terms (plus an
/// R-squared row), columns are modes, cells hold the coefficient with
/// significance stars and the p-value beneath it in parentheses.
///
/// Stars mark two-sided significance at the 1% (***), 5% (**), and 10% (*)
/// levels. Scales that failed to fit get empty cells; their error is in
/// the JSON report.
pub fn write_regression_table_csv(report: &RegressionReport, path: impl AsRef<Path>) -> Result<()> {
    let terms: Vec<String> = report
        .scales
        .iter()
        .find_map(|s| s.ols.as_ref().map(|o| o.terms.clone()))
        .ok_or_else(|| Error::invalid("regression table: no scale produced a fit"))?;
    let mut out = String::from("term");
    for scale in &report.scales {
        write!(out, ",IMF{}", scale.imf_index).expect("string write");
    }
    out.push('\n');
    for (j, term) in terms.iter().enumerate() {
        out.push_str(term);
        for scale in &report.scales {
            match &scale.ols {
                Some(ols) => {
                    let coef = ols.coefficients[j];
                    match ols.p_values[j] {
                        Some(p) => write!(out, ",{:.6}{} ({:.4})", coef, significance_stars(p), p)
                            .expect("string write"),
                        None => write!(out, ",{coef:.6}").expect("string write"),
                    }
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out.push_str("R2");
    for scale in &report.scales {
        match &scale.ols {
            Some(ols) => write!(out, ",{:.6}", ols.r_squared).expect("string write"),
            None => out.push(','),
        }
    }
    out.push('\n');
    write_text(path.as_ref(), &out)
}

/// Writes instantaneous amplitude and frequency per mode, in long form:
/// `t,imf,amplitude,frequency,edge`. `edge` is 1 where the estimate leans
/// on one-sided differences near a boundary.
pub fn write_hilbert_csv(d: &Decomposition, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("t,imf,amplitude,frequency,edge\n");
    for imf in &d.imfs {
        let z = analytic_signal(&imf.values)
            .map_err(|e| Error::invalid(format!("mode {}: {e}", imf.index)))?;
        let profile = instantaneous_profile(&z);
        let n = imf.values.len();
        for (i, date) in d.timestamps.iter().enumerate() {
            let edge =
                i < profile.unreliable_edge_samples || i + profile.unreliable_edge_samples >= n;
            writeln!(
                out,
                "{date},{},{},{},{}",
                imf.index, profile.amplitude[i], profile.frequency[i], edge as u8
            )
            .expect("string write");
        }
    }
    write_text(path.as_ref(), &out)
}

/// Writes the first sifting step of a series for plotting: the signal, its
/// two envelopes, their mean, and the first candidate mode.
pub fn write_envelope_csv(
    series: &TimeSeries,
    config: &SiftConfig,
    path: impl AsRef<Path>,
) -> Result<()> {
    let step = crate::emd::sift_once(series.values(), config).ok_or_else(|| {
        Error::invalid(format!(
            "envelope plot: series {:?} has no oscillation to sift",
            series.name()
        ))
    })?;
    let mut out = String::from("t,x,upper,lower,mean,candidate\n");
    for (i, date) in series.timestamps().iter().enumerate() {
        writeln!(
            out,
            "{date},{},{},{},{},{}",
            series.values()[i],
            step.upper[i],
            step.lower[i],
            step.envelope_mean[i],
            step.candidate[i]
        )
        .expect("string write");
    }
    write_text(path.as_ref(), &out)
}

/// Writes the original series next to its modes and residue:
/// `t,x,imf1..imfK,residue`.
pub fn write_modes_csv(
    series: &TimeSeries,
    d: &Decomposition,
    path: impl AsRef<Path>,
) -> Result<()> {
    if series.len() != d.len() {
        return Err(Error::invalid(format!(
            "modes plot: series has {} samples, decomposition {}",
            series.len(),
            d.len()
        )));
    }
    let mut out = String::from("t,x");
    for imf in &d.imfs {
        write!(out, ",imf{}", imf.index).expect("string write");
    }
    out.push_str(",residue\n");
    for (i, date) in series.timestamps().iter().enumerate() {
        write!(out, "{date},{}", series.values()[i]).expect("string write");
        for imf in &d.imfs {
            write!(out, ",{}", imf.values[i]).expect("string write");
        }
        writeln!(out, ",{}", d.residue[i]).expect("string write");
    }
    write_text(path.as_ref(), &out)
}
