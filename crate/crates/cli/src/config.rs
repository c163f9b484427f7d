//! Flat `key = value` pipeline configuration.
//!
//! Lines are UTF-8, one assignment each; `#` starts a comment line and blank
//! lines are ignored. Keys carry section prefixes (`eemd.noise_std`); the
//! full key set is fixed and unknown or duplicate keys are rejected so a
//! typo cannot silently fall back to a default.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use modescale::emd::{BoundaryPolicy, MaxImfs, Method, SiftConfig, TransformKind};
use modescale::metrics::{HorizonRule, PERIOD_LONG_MIN, PERIOD_SHORT_MAX};
use modescale::regression::{RegressionSpec, Taxonomy};
use modescale::{Error, Result};

/// Which artifacts the pipeline emits beyond the decompositions.
#[derive(Debug, Clone, Copy)]
pub struct EmitFlags {
    pub features: bool,
    pub regression: bool,
    pub hilbert: bool,
    pub plotdata: bool,
}

/// A fully resolved pipeline run: every default filled in.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input_file: PathBuf,
    pub date_column: String,
    pub columns: Vec<String>,
    pub method: Method,
    pub seed: u64,
    pub sift: SiftConfig,
    pub noise_std: f64,
    pub ensemble_size: usize,
    pub transform: TransformKind,
    pub deflator: Option<String>,
    pub regression: Option<RegressionSpec>,
    pub horizon_rule: HorizonRule,
    pub output_dir: Option<PathBuf>,
    pub emit: EmitFlags,
}

const KNOWN_KEYS: &[&str] = &[
    "input.file",
    "input.date_column",
    "input.columns",
    "method",
    "seed",
    "sift.sd_threshold",
    "sift.max_sift_iters",
    "sift.max_imfs",
    "sift.boundary",
    "eemd.noise_std",
    "eemd.ensemble_size",
    "transform.kind",
    "transform.deflator",
    "regression.dependent",
    "regression.regressors",
    "regression.lag_dependent",
    "regression.alpha",
    "regression.robust_se",
    "regression.taxonomy",
    "features.horizon_rule",
    "output.dir",
    "emit.features",
    "emit.regression",
    "emit.hilbert",
    "emit.plotdata",
];

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::invalid(format!("pipeline config: line {line}: {msg}"))
}

fn parse_with<T: FromStr>(raw: &str, line: usize, what: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| bad(line, format!("{what} expected, got {raw:?}")))
}

fn parse_bool(raw: &str, line: usize) -> Result<bool> {
    match raw {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(bad(line, format!("expected true or false, got {other:?}"))),
    }
}

struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw_line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| bad(line, format!("expected `key = value`, got {trimmed:?}")))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(bad(line, format!("unknown key {key:?}")));
            }
            if let Some((first, _)) = entries.get(&key) {
                return Err(bad(
                    line,
                    format!("duplicate key {key:?} (first set on line {first})"),
                ));
            }
            entries.insert(key, (line, value));
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }
}

impl PipelineConfig {
    /// Parses a config file body. `default_seed` fills in when the file has
    /// no `seed` line; the applied value is recorded either way.
    pub fn parse(text: &str, default_seed: u64) -> Result<PipelineConfig> {
        let mut raw = RawConfig::parse(text)?;

        let (_, input_file) = raw.take("input.file").ok_or_else(|| {
            Error::invalid("pipeline config: missing required key \"input.file\"")
        })?;
        let (cols_line, columns_raw) = raw.take("input.columns").ok_or_else(|| {
            Error::invalid("pipeline config: missing required key \"input.columns\"")
        })?;
        let columns: Vec<String> = columns_raw
            .split(',')
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        if columns.is_empty() {
            return Err(bad(cols_line, "input.columns names no columns"));
        }
        let date_column = raw
            .take("input.date_column")
            .map(|(_, v)| v)
            .unwrap_or_else(|| "date".to_string());

        let method = match raw.take("method") {
            None => Method::Eemd,
            Some((line, v)) => match v.as_str() {
                "emd" => Method::Emd,
                "eemd" => Method::Eemd,
                other => {
                    return Err(bad(
                        line,
                        format!("method must be emd or eemd, got {other:?}"),
                    ))
                }
            },
        };
        let seed = match raw.take("seed") {
            None => default_seed,
            Some((line, v)) => parse_with(&v, line, "integer seed")?,
        };

        let mut sift = SiftConfig::default();
        if let Some((line, v)) = raw.take("sift.sd_threshold") {
            sift.sd_threshold = parse_with(&v, line, "number")?;
        }
        if let Some((line, v)) = raw.take("sift.max_sift_iters") {
            sift.max_sift_iters = parse_with(&v, line, "integer")?;
        }
        if let Some((line, v)) = raw.take("sift.max_imfs") {
            sift.max_imfs = MaxImfs::from_str(&v).map_err(|e| bad(line, e))?;
        }
        if let Some((line, v)) = raw.take("sift.boundary") {
            sift.boundary = match v.as_str() {
                "mirror" => BoundaryPolicy::Mirror,
                "clamp" => BoundaryPolicy::ClampToEndpoints,
                other => {
                    return Err(bad(
                        line,
                        format!("boundary must be mirror or clamp, got {other:?}"),
                    ))
                }
            };
        }

        let noise_std = match raw.take("eemd.noise_std") {
            None => 0.2,
            Some((line, v)) => parse_with(&v, line, "number")?,
        };
        let ensemble_size = match raw.take("eemd.ensemble_size") {
            None => 100,
            Some((line, v)) => parse_with(&v, line, "integer")?,
        };

        let transform = match raw.take("transform.kind") {
            None => TransformKind::Levels,
            Some((line, v)) => TransformKind::from_str(&v).map_err(|e| bad(line, e))?,
        };
        let deflator = raw.take("transform.deflator").map(|(_, v)| v);

        let regression = match raw.take("regression.dependent") {
            None => {
                for key in [
                    "regression.regressors",
                    "regression.lag_dependent",
                    "regression.alpha",
                    "regression.robust_se",
                    "regression.taxonomy",
                ] {
                    if let Some((line, _)) = raw.take(key) {
                        return Err(bad(
                            line,
                            format!("{key} is set but regression.dependent is missing"),
                        ));
                    }
                }
                None
            }
            Some((_, dependent)) => {
                let (reg_line, regressors_raw) = raw.take("regression.regressors").ok_or_else(
                    || Error::invalid("pipeline config: regression.dependent is set but regression.regressors is missing"),
                )?;
                let regressors: Vec<String> = regressors_raw
                    .split(',')
                    .map(|c| c.trim().to_string())
                    .filter(|c| !c.is_empty())
                    .collect();
                if regressors.is_empty() {
                    return Err(bad(reg_line, "regression.regressors names no columns"));
                }
                let lag_dependent = match raw.take("regression.lag_dependent") {
                    None => 1,
                    Some((line, v)) => parse_with(&v, line, "integer")?,
                };
                let alpha = match raw.take("regression.alpha") {
                    None => 0.10,
                    Some((line, v)) => parse_with(&v, line, "number")?,
                };
                let robust_se = match raw.take("regression.robust_se") {
                    None => false,
                    Some((line, v)) => parse_bool(&v, line)?,
                };
                let taxonomy = match raw.take("regression.taxonomy") {
                    None => Taxonomy::ThreeWay,
                    Some((line, v)) => Taxonomy::from_str(&v).map_err(|e| bad(line, e))?,
                };
                Some(RegressionSpec {
                    dependent,
                    regressors,
                    lag_dependent,
                    alpha,
                    robust_se,
                    taxonomy,
                })
            }
        };

        let horizon_rule = match raw.take("features.horizon_rule") {
            None => HorizonRule::ByIndex,
            Some((line, v)) => match v.as_str() {
                "index" => HorizonRule::ByIndex,
                "period" => HorizonRule::ByMeanPeriod {
                    short_max: PERIOD_SHORT_MAX,
                    long_min: PERIOD_LONG_MIN,
                },
                other => {
                    return Err(bad(
                        line,
                        format!("horizon rule must be index or period, got {other:?}"),
                    ))
                }
            },
        };

        let output_dir = raw.take("output.dir").map(|(_, v)| PathBuf::from(v));

        let emit = EmitFlags {
            features: match raw.take("emit.features") {
                None => true,
                Some((line, v)) => parse_bool(&v, line)?,
            },
            regression: match raw.take("emit.regression") {
                None => regression.is_some(),
                Some((line, v)) => parse_bool(&v, line)?,
            },
            hilbert: match raw.take("emit.hilbert") {
                None => false,
                Some((line, v)) => parse_bool(&v, line)?,
            },
            plotdata: match raw.take("emit.plotdata") {
                None => false,
                Some((line, v)) => parse_bool(&v, line)?,
            },
        };
        if emit.regression && regression.is_none() {
            return Err(Error::invalid(
                "pipeline config: emit.regression is true but regression.dependent is missing",
            ));
        }

        debug_assert!(raw.entries.is_empty(), "unconsumed known key");
        let config = PipelineConfig {
            input_file: PathBuf::from(input_file),
            date_column,
            columns,
            method,
            seed,
            sift,
            noise_std,
            ensemble_size,
            transform,
            deflator,
            regression,
            horizon_rule,
            output_dir,
            emit,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        self.sift.validate()?;
        if self.method == Method::Eemd {
            if self.ensemble_size == 0 {
                return Err(Error::invalid(
                    "pipeline config: eemd.ensemble_size must be at least 1",
                ));
            }
            if !self.noise_std.is_finite() || self.noise_std < 0.0 {
                return Err(Error::invalid(
                    "pipeline config: eemd.noise_std must be finite and non-negative",
                ));
            }
        }
        if let Some(spec) = &self.regression {
            spec.validate()?;
        }
        if let Some(deflator) = &self.deflator {
            if self.columns.contains(deflator) {
                return Err(Error::invalid(format!(
                    "pipeline config: deflator column {deflator:?} cannot also be analyzed"
                )));
            }
        }
        Ok(())
    }

    /// The resolved configuration as flat key/value text, defaults included,
    /// for the manifest. Rerunning from these pairs reproduces the run.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            map.insert(k.to_string(), v);
        };
        put("input.file", self.input_file.display().to_string());
        put("input.date_column", self.date_column.clone());
        put("input.columns", self.columns.join(","));
        put(
            "method",
            match self.method {
                Method::Emd => "emd".to_string(),
                Method::Eemd => "eemd".to_string(),
            },
        );
        put("seed", self.seed.to_string());
        put("sift.sd_threshold", self.sift.sd_threshold.to_string());
        put("sift.max_sift_iters", self.sift.max_sift_iters.to_string());
        put(
            "sift.max_imfs",
            match self.sift.max_imfs {
                MaxImfs::Auto => "auto".to_string(),
                MaxImfs::Fixed(k) => k.to_string(),
            },
        );
        put(
            "sift.boundary",
            match self.sift.boundary {
                BoundaryPolicy::Mirror => "mirror".to_string(),
                BoundaryPolicy::ClampToEndpoints => "clamp".to_string(),
            },
        );
        put("eemd.noise_std", self.noise_std.to_string());
        put("eemd.ensemble_size", self.ensemble_size.to_string());
        put(
            "transform.kind",
            match self.transform {
                TransformKind::Levels => "levels".to_string(),
                TransformKind::Log => "log".to_string(),
            },
        );
        if let Some(deflator) = &self.deflator {
            put("transform.deflator", deflator.clone());
        }
        if let Some(spec) = &self.regression {
            put("regression.dependent", spec.dependent.clone());
            put("regression.regressors", spec.regressors.join(","));
            put("regression.lag_dependent", spec.lag_dependent.to_string());
            put("regression.alpha", spec.alpha.to_string());
            put("regression.robust_se", spec.robust_se.to_string());
            put(
                "regression.taxonomy",
                match spec.taxonomy {
                    Taxonomy::ThreeWay => "three-way".to_string(),
                    Taxonomy::OnAverage => "on-average".to_string(),
                },
            );
        }
        put(
            "features.horizon_rule",
            match self.horizon_rule {
                HorizonRule::ByIndex => "index".to_string(),
                HorizonRule::ByMeanPeriod { .. } => "period".to_string(),
            },
        );
        if let Some(dir) = &self.output_dir {
            put("output.dir", dir.display().to_string());
        }
        put("emit.features", self.emit.features.to_string());
        put("emit.regression", self.emit.regression.to_string());
        put("emit.hilbert", self.emit.hilbert.to_string());
        put("emit.plotdata", self.emit.plotdata.to_string());
        map
    }
}
