//! Decomposition of daily time series into oscillatory modes and analysis of
//! the modes across time scales.
//!
//! The crate covers the full path from raw CSV panels to scale-resolved
//! regression output:
//!
//! * [`series`]: calendar-aware series ingestion, alignment, and the price
//!   transforms (deflation, forward pricing) applied before decomposition.
//! * [`emd`]: empirical mode decomposition by cubic-spline envelope sifting.
//! * [`eemd`]: the noise-assisted ensemble variant with deterministic,
//!   seedable noise streams.
//! * [`hilbert`]: analytic-signal construction and instantaneous
//!   amplitude/frequency profiles for extracted modes.
//! * [`metrics`]: per-mode descriptive statistics (mean period, correlation
//!   against the original series, variance shares, horizon grouping).
//! * [`regression`]: per-scale OLS with lagged dependent terms and the
//!   hedge/safe-haven classification of regressors.
//! * [`report`]: CSV/JSON serialization for every artifact above.
//!
//! All randomized code paths are seeded explicitly; rerunning any operation
//! with the same inputs and seed reproduces output byte for byte.

pub mod eemd;
pub mod emd;
mod error;
pub mod hilbert;
pub mod metrics;
pub mod regression;
pub mod report;
pub mod series;
pub mod spline;
pub mod synth;

pub use eemd::{eemd, generate_noise, trial_stream, EemdConfig};
pub use emd::{
    count_zero_crossings, emd, envelope, extract_imf, find_extrema, sift_once, BoundaryPolicy,
    Decomposition, DecompositionParams, EemdParams, Extrema, Imf, MaxImfs, Method, SiftConfig,
    SiftStep, TransformKind,
};
pub use error::{Error, Result};
pub use hilbert::{analytic_signal, instantaneous_profile, InstantaneousProfile};
pub use metrics::{
    feature_table, horizon_by_period, horizon_group, kendall_tau, kendall_tau_test, mean_period,
    pearson, pearson_test, variance_share, FeatureTable, Horizon, HorizonRule, ImfFeatureRow,
};
pub use regression::{
    classify, multiscale_fit, ols_fit, OlsResult, RegressionSpec, RoleLabel, RuleInputs,
    ScaleClassification, ScaleFit, Taxonomy,
};
pub use report::{
    build_regression_report, read_decomposition, write_decomposition_csv,
    write_decomposition_sidecar, write_feature_table_csv, write_feature_table_json,
    write_regression_report_json, write_regression_table_csv, DecompositionSidecar,
    RegressionReport,
};
pub use series::{
    align, deflate_to_real, forward_price, ingest_csv, upsample_low_to_high, write_csv,
    AlignedPanel, ForwardInputs, TimeSeries,
};
