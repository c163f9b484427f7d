//! One function per CLI verb. The pipeline drives the same functions, so a
//! standalone invocation and a pipeline stage produce identical bytes.

use std::path::{Path, PathBuf};

use modescale::eemd::{eemd, EemdConfig};
use modescale::emd::{emd, Decomposition, Method, SiftConfig, TransformKind};
use modescale::metrics::{feature_table, HorizonRule};
use modescale::regression::{multiscale_fit, RegressionSpec};
use modescale::report::{
    build_regression_report, read_decomposition, write_decomposition_csv,
    write_decomposition_sidecar, write_envelope_csv, write_feature_table_csv,
    write_feature_table_json, write_hilbert_csv, write_modes_csv, write_regression_report_json,
    write_regression_table_csv,
};
use modescale::series::{deflate_to_real, ingest_csv_with, TimeSeries};
use modescale::{Error, Result};

/// Decomposition settings shared by `decompose`, `plotdata`, and the
/// pipeline's decompose stage.
#[derive(Debug, Clone)]
pub struct DecomposeOptions {
    pub method: Method,
    pub sift: SiftConfig,
    pub noise_std: f64,
    pub ensemble_size: usize,
    pub transform: TransformKind,
}

/// Applies the value transform, naming the offending sample on failure.
pub fn apply_transform(series: &TimeSeries, kind: TransformKind) -> Result<TimeSeries> {
    match kind {
        TransformKind::Levels => Ok(series.clone()),
        TransformKind::Log => {
            if let Some(i) = series.values().iter().position(|&v| v <= 0.0) {
                return Err(Error::invalid(format!(
                    "column {:?}: log transform needs positive values, got {} at {}",
                    series.name(),
                    series.values()[i],
                    series.timestamps()[i]
                )));
            }
            series.map_values(series.name().to_string(), f64::ln)
        }
    }
}

/// Loads one column, applying the optional deflator and the transform.
pub fn load_prepared_column(
    input: &Path,
    date_column: &str,
    column: &str,
    deflator: Option<&str>,
    transform: TransformKind,
) -> Result<TimeSeries> {
    let mut series = ingest_csv_with(input, date_column, column)?;
    if let Some(index_column) = deflator {
        let index = ingest_csv_with(input, date_column, index_column)?;
        series = deflate_to_real(&series, &index)?;
    }
    apply_transform(&series, transform)
}

/// Runs the configured decomposition on an already prepared series.
pub fn decompose_series(
    series: &TimeSeries,
    options: &DecomposeOptions,
    seed: u64,
) -> Result<Decomposition> {
    let mut d = match options.method {
        Method::Emd => emd(series, &options.sift)?,
        Method::Eemd => {
            let config = EemdConfig {
                noise_std: options.noise_std,
                ensemble_size: options.ensemble_size,
                seed,
                sift: options.sift,
            };
            eemd(series, &config)?
        }
    };
    d.transform = options.transform;
    Ok(d)
}

/// `decompose`: one CSV + sidecar pair per column. Column `i` of one
/// invocation uses seed `base_seed + i`, so no two columns share a noise
/// stream; the applied seed is in each sidecar.
pub fn cmd_decompose(
    input: &Path,
    date_column: &str,
    columns: &[String],
    deflator: Option<&str>,
    options: &DecomposeOptions,
    base_seed: u64,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (i, column) in columns.iter().enumerate() {
        let series = load_prepared_column(input, date_column, column, deflator, options.transform)?;
        let d = decompose_series(&series, options, base_seed + i as u64)?;
        let csv = out.join(format!("{column}.csv"));
        let sidecar = out.join(format!("{column}.json"));
        write_decomposition_csv(&d, &csv)?;
        write_decomposition_sidecar(&d, &sidecar)?;
        written.push(csv);
        written.push(sidecar);
    }
    Ok(written)
}

/// Sidecar path for a decomposition CSV: same stem, `.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn file_stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.to_string())
        .ok_or_else(|| Error::invalid(format!("{}: no usable file stem", path.display())))
}

/// `features`: mode statistics for one stored decomposition.
pub fn cmd_features(
    decomposition_csv: &Path,
    rule: HorizonRule,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let d = read_decomposition(decomposition_csv, sidecar_path(decomposition_csv))?;
    let table = feature_table(&d, rule)?;
    let stem = file_stem(decomposition_csv)?;
    let csv = out.join(format!("{stem}_features.csv"));
    let json = out.join(format!("{stem}_features.json"));
    write_feature_table_csv(&table, &csv)?;
    write_feature_table_json(&table, &json)?;
    Ok(vec![csv, json])
}

/// `regress`: loads the dependent and regressor decompositions from
/// `decomp_dir`, checks they were produced under `expected_transform`, fits
/// per scale, and writes the JSON report plus the presentational table.
pub fn cmd_regress(
    decomp_dir: &Path,
    spec: &RegressionSpec,
    expected_transform: TransformKind,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    spec.validate()?;
    let mut decomps = Vec::new();
    for name in std::iter::once(&spec.dependent).chain(&spec.regressors) {
        let csv = decomp_dir.join(format!("{name}.csv"));
        let d = read_decomposition(&csv, sidecar_path(&csv))?;
        if d.transform != expected_transform {
            return Err(Error::invalid(format!(
                "series {name:?} was decomposed under transform {:?}, expected {:?}",
                d.transform, expected_transform
            )));
        }
        decomps.push(d);
    }
    let fits = multiscale_fit(&decomps, spec)?;
    if fits.is_empty() {
        return Err(Error::invalid(
            "regression: the decompositions have no oscillatory modes",
        ));
    }
    // One degenerate scale only blanks its own column, but when every scale
    // failed there is no report to write; surface the underlying cause.
    if fits.iter().all(|s| s.fit.is_err()) {
        let first = fits.into_iter().next().expect("checked non-empty");
        return Err(first.fit.expect_err("checked all failed"));
    }
    let report = build_regression_report(&fits, spec)?;
    let json = out.join("regression.json");
    let csv = out.join("regression.csv");
    write_regression_report_json(&report, &json)?;
    write_regression_table_csv(&report, &csv)?;
    Ok(vec![json, csv])
}

/// `hilbert`: instantaneous amplitude/frequency per mode of one stored
/// decomposition.
pub fn cmd_hilbert(decomposition_csv: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let d = read_decomposition(decomposition_csv, sidecar_path(decomposition_csv))?;
    let stem = file_stem(decomposition_csv)?;
    let csv = out.join(format!("{stem}_hilbert.csv"));
    write_hilbert_csv(&d, &csv)?;
    Ok(vec![csv])
}

/// Plot files for one prepared series and its decomposition.
pub fn write_plotdata(
    series: &TimeSeries,
    d: &Decomposition,
    sift: &SiftConfig,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let envelope = out.join(format!("{}_envelope.csv", series.name()));
    let modes = out.join(format!("{}_modes.csv", series.name()));
    write_envelope_csv(series, sift, &envelope)?;
    write_modes_csv(series, d, &modes)?;
    Ok(vec![envelope, modes])
}

/// `plotdata`: decomposes one column and emits gnuplot-ready envelope and
/// mode files.
#[allow(clippy::too_many_arguments)]
pub fn cmd_plotdata(
    input: &Path,
    date_column: &str,
    column: &str,
    deflator: Option<&str>,
    options: &DecomposeOptions,
    seed: u64,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let series = load_prepared_column(input, date_column, column, deflator, options.transform)?;
    let d = decompose_series(&series, options, seed)?;
    write_plotdata(&series, &d, &options.sift, out)
}
