//! Calendar-aware series containers, CSV ingestion, alignment across
//! calendars, and the price transforms applied ahead of decomposition.

use std::collections::BTreeSet;
use std::io::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default name of the calendar column in CSV files.
pub const DATE_COLUMN: &str = "date";

/// A named series of finite values on a strictly increasing daily calendar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    name: String,
    timestamps: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series, validating the container invariants: equal lengths,
    /// at least one observation, strictly increasing timestamps, and finite
    /// values throughout.
    pub fn new(
        name: impl Into<String>,
        timestamps: Vec<NaiveDate>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if timestamps.len() != values.len() {
            return Err(Error::invalid(format!(
                "series {:?}: {} timestamps but {} values",
                name,
                timestamps.len(),
                values.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::invalid(format!("series {:?} is empty", name)));
        }
        for w in timestamps.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid(format!(
                    "series {:?}: timestamps not strictly increasing at {}",
                    name, w[1]
                )));
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "series {:?}: non-finite value at {}",
                name, timestamps[i]
            )));
        }
        Ok(TimeSeries {
            name,
            timestamps,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Returns a copy with `f` applied to every value. Fails if the map
    /// produces a non-finite value (the offending date is named).
    pub fn map_values(&self, name: impl Into<String>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        TimeSeries::new(name, self.timestamps.clone(), mapped)
    }
}

/// Two or more series restricted to one shared calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    timestamps: Vec<NaiveDate>,
    series: Vec<TimeSeries>,
}

impl AlignedPanel {
    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// First and last shared date.
    pub fn window(&self) -> (NaiveDate, NaiveDate) {
        (self.timestamps[0], *self.timestamps.last().unwrap())
    }

    pub fn by_name(&self, name: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|s| s.name() == name)
    }
}

/// Inputs to the cost-of-carry forward price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardInputs {
    /// Spot price, strictly positive.
    pub spot: f64,
    /// Per-period interest rate as a fraction (may be negative).
    pub rate: f64,
    /// Storage cost per period, non-negative.
    pub storage: f64,
    /// Convenience yield per period, non-negative.
    pub convenience: f64,
}

impl ForwardInputs {
    pub fn validate(&self) -> Result<()> {
        if !self.spot.is_finite() || self.spot <= 0.0 {
            return Err(Error::invalid(format!(
                "forward inputs: spot must be positive, got {}",
                self.spot
            )));
        }
        if !self.rate.is_finite() {
            return Err(Error::invalid("forward inputs: rate must be finite"));
        }
        if !self.storage.is_finite() || self.storage < 0.0 {
            return Err(Error::invalid(format!(
                "forward inputs: storage must be non-negative, got {}",
                self.storage
            )));
        }
        if !self.convenience.is_finite() || self.convenience < 0.0 {
            return Err(Error::invalid(format!(
                "forward inputs: convenience yield must be non-negative, got {}",
                self.convenience
            )));
        }
        Ok(())
    }
}

/// One-period forward price: spot plus interest on the spot plus storage
/// cost, less the convenience yield of holding the physical asset.
pub fn forward_price(inputs: &ForwardInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(inputs.spot + inputs.rate * inputs.spot + inputs.storage - inputs.convenience)
}

/// Reads one named column from a CSV file with a `date` calendar column.
pub fn ingest_csv(path: impl AsRef<Path>, column: &str) -> Result<TimeSeries> {
    ingest_csv_with(path, DATE_COLUMN, column)
}

/// Reads one named column, with an explicit calendar column name.
///
/// Rows are rejected (never silently dropped) when the value cell does not
/// parse as a number or the date cell is not ISO-8601; the error names the
/// column and the 1-based data row. Dates must be strictly increasing.
pub fn ingest_csv_with(
    path: impl AsRef<Path>,
    date_column: &str,
    column: &str,
) -> Result<TimeSeries> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let date_idx = find(date_column).ok_or_else(|| {
        Error::invalid(format!(
            "{}: missing column {:?} (found: {})",
            path.display(),
            date_column,
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })?;
    let value_idx = find(column).ok_or_else(|| {
        Error::invalid(format!(
            "{}: missing column {:?} (found: {})",
            path.display(),
            column,
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })?;

    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?;
        let date_cell = record.get(date_idx).unwrap_or("");
        let date: NaiveDate = date_cell.parse().map_err(|_| {
            Error::invalid(format!(
                "{}: unparseable date {:?} in column {:?} at row {}",
                path.display(),
                date_cell,
                date_column,
                row
            ))
        })?;
        if let Some(prev) = timestamps.last() {
            if date <= *prev {
                return Err(Error::invalid(format!(
                    "{}: dates not strictly increasing at row {} ({} after {})",
                    path.display(),
                    row,
                    date,
                    prev
                )));
            }
        }
        let value_cell = record.get(value_idx).unwrap_or("");
        let value: f64 = value_cell.trim().parse().map_err(|_| {
            Error::invalid(format!(
                "{}: non-numeric value {:?} in column {:?} at row {}",
                path.display(),
                value_cell,
                column,
                row
            ))
        })?;
        if !value.is_finite() {
            return Err(Error::invalid(format!(
                "{}: non-finite value in column {:?} at row {}",
                path.display(),
                column,
                row
            )));
        }
        timestamps.push(date);
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::invalid(format!(
            "{}: column {:?} has no rows",
            path.display(),
            column
        )));
    }
    TimeSeries::new(column, timestamps, values)
}

/// Writes series sharing one calendar to a CSV file mirroring the input
/// schema: a `date` column followed by one column per series.
///
/// Values are written in shortest round-trip form, so reading the file back
/// reproduces them bit for bit.
pub fn write_csv(series: &[&TimeSeries], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let first = series
        .first()
        .ok_or_else(|| Error::invalid("write_csv: no series given"))?;
    for s in series {
        if s.timestamps() != first.timestamps() {
            return Err(Error::invalid(format!(
                "write_csv: series {:?} and {:?} have different calendars",
                first.name(),
                s.name()
            )));
        }
    }
    let mut out = String::new();
    out.push_str(DATE_COLUMN);
    for s in series {
        out.push(',');
        out.push_str(s.name());
    }
    out.push('\n');
    for (i, date) in first.timestamps().iter().enumerate() {
        out.push_str(&date.to_string());
        for s in series {
            out.push(',');
            out.push_str(&format!("{}", s.values()[i]));
        }
        out.push('\n');
    }
    let mut file =
        std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?;
    Ok(())
}

/// Restricts two or more series to the intersection of their calendars.
///
/// The shared dates keep their chronological order. Fails when fewer than
/// two series are given or the calendars have an empty intersection.
pub fn align(series: Vec<TimeSeries>) -> Result<AlignedPanel> {
    if series.len() < 2 {
        return Err(Error::invalid(format!(
            "align: need at least 2 series, got {}",
            series.len()
        )));
    }
    let mut shared: BTreeSet<NaiveDate> = series[0].timestamps().iter().copied().collect();
    for s in &series[1..] {
        let dates: BTreeSet<NaiveDate> = s.timestamps().iter().copied().collect();
        shared = shared.intersection(&dates).copied().collect();
    }
    if shared.is_empty() {
        let names: Vec<&str> = series.iter().map(|s| s.name()).collect();
        return Err(Error::invalid(format!(
            "align: calendars of {} have an empty intersection",
            names.join(", ")
        )));
    }
    let timestamps: Vec<NaiveDate> = shared.iter().copied().collect();
    let mut aligned = Vec::with_capacity(series.len());
    for s in series {
        let values: Vec<f64> = s
            .timestamps()
            .iter()
            .zip(s.values())
            .filter(|(d, _)| shared.contains(d))
            .map(|(_, &v)| v)
            .collect();
        aligned.push(TimeSeries::new(
            s.name().to_string(),
            timestamps.clone(),
            values,
        )?);
    }
    Ok(AlignedPanel {
        timestamps,
        series: aligned,
    })
}

/// Linearly interpolates a low-frequency series onto a finer calendar.
///
/// Interpolation is linear in calendar days between consecutive anchor
/// observations. Target dates must fall inside the anchor window; the
/// result is exact at the anchors themselves.
pub fn upsample_low_to_high(low: &TimeSeries, target: &[NaiveDate]) -> Result<TimeSeries> {
    if low.len() < 2 {
        return Err(Error::invalid(format!(
            "upsample: series {:?} needs at least 2 anchor observations, got {}",
            low.name(),
            low.len()
        )));
    }
    if target.is_empty() {
        return Err(Error::invalid("upsample: target calendar is empty"));
    }
    for w in target.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid(format!(
                "upsample: target calendar not strictly increasing at {}",
                w[1]
            )));
        }
    }
    let anchors = low.timestamps();
    let first = anchors[0];
    let last = *anchors.last().unwrap();
    let mut values = Vec::with_capacity(target.len());
    for &date in target {
        if date < first || date > last {
            return Err(Error::invalid(format!(
                "upsample: target date {} outside anchor window {}..{}",
                date, first, last
            )));
        }
        match anchors.binary_search(&date) {
            Ok(i) => values.push(low.values()[i]),
            Err(i) => {
                // `date` lies strictly between anchors[i - 1] and anchors[i].
                let (d0, d1) = (anchors[i - 1], anchors[i]);
                let (v0, v1) = (low.values()[i - 1], low.values()[i]);
                let span = (d1 - d0).num_days() as f64;
                let offset = (date - d0).num_days() as f64;
                values.push(v0 + (v1 - v0) * (offset / span));
            }
        }
    }
    TimeSeries::new(low.name().to_string(), target.to_vec(), values)
}

/// Converts a nominal series to real terms against a price index, both on
/// the same calendar. The index is rebased to its first observation, so the
/// real series equals the nominal one at the window start.
pub fn deflate_to_real(nominal: &TimeSeries, price_index: &TimeSeries) -> Result<TimeSeries> {
    if nominal.timestamps() != price_index.timestamps() {
        return Err(Error::invalid(format!(
            "deflate: series {:?} and index {:?} are not on the same calendar",
            nominal.name(),
            price_index.name()
        )));
    }
    if let Some(i) = price_index.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::invalid(format!(
            "deflate: index {:?} not strictly positive at {}",
            price_index.name(),
            price_index.timestamps()[i]
        )));
    }
    let base = price_index.values()[0];
    let values: Vec<f64> = nominal
        .values()
        .iter()
        .zip(price_index.values())
        .map(|(&v, &p)| v / (p / base))
        .collect();
    TimeSeries::new(
        nominal.name().to_string(),
        nominal.timestamps().to_vec(),
        values,
    )
}
