//! `modescale`: decompose daily series into oscillatory modes and analyze
//! them across time scales.
//!
//! Exit codes: 0 success, 1 invalid input or I/O failure, 2 numerical
//! failure. Every randomized step is seeded; identical invocations write
//! identical bytes.

mod commands;
mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use modescale::emd::{BoundaryPolicy, MaxImfs, Method, TransformKind};
use modescale::metrics::HorizonRule;
use modescale::regression::{RegressionSpec, Taxonomy};
use modescale::{Error, Result};

use commands::DecomposeOptions;

#[derive(Parser)]
#[command(
    name = "modescale",
    version,
    about = "Ensemble mode decomposition and multi-scale regression for daily time series"
)]
struct Cli {
    /// Directory where output files are written.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Base seed for every randomized stage.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Log filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum MethodArg {
    Emd,
    Eemd,
}

#[derive(Copy, Clone, ValueEnum)]
enum BoundaryArg {
    Mirror,
    Clamp,
}

#[derive(Copy, Clone, ValueEnum)]
enum TransformArg {
    Levels,
    Log,
}

#[derive(Copy, Clone, ValueEnum)]
enum HorizonArg {
    Index,
    Period,
}

#[derive(Copy, Clone, ValueEnum)]
enum TaxonomyArg {
    ThreeWay,
    OnAverage,
}

impl From<MethodArg> for Method {
    fn from(v: MethodArg) -> Method {
        match v {
            MethodArg::Emd => Method::Emd,
            MethodArg::Eemd => Method::Eemd,
        }
    }
}

impl From<BoundaryArg> for BoundaryPolicy {
    fn from(v: BoundaryArg) -> BoundaryPolicy {
        match v {
            BoundaryArg::Mirror => BoundaryPolicy::Mirror,
            BoundaryArg::Clamp => BoundaryPolicy::ClampToEndpoints,
        }
    }
}

impl From<TransformArg> for TransformKind {
    fn from(v: TransformArg) -> TransformKind {
        match v {
            TransformArg::Levels => TransformKind::Levels,
            TransformArg::Log => TransformKind::Log,
        }
    }
}

impl From<HorizonArg> for HorizonRule {
    fn from(v: HorizonArg) -> HorizonRule {
        match v {
            HorizonArg::Index => HorizonRule::ByIndex,
            HorizonArg::Period => HorizonRule::ByMeanPeriod {
                short_max: modescale::metrics::PERIOD_SHORT_MAX,
                long_min: modescale::metrics::PERIOD_LONG_MIN,
            },
        }
    }
}

impl From<TaxonomyArg> for Taxonomy {
    fn from(v: TaxonomyArg) -> Taxonomy {
        match v {
            TaxonomyArg::ThreeWay => Taxonomy::ThreeWay,
            TaxonomyArg::OnAverage => Taxonomy::OnAverage,
        }
    }
}

fn parse_max_imfs(s: &str) -> std::result::Result<MaxImfs, String> {
    s.parse::<MaxImfs>().map_err(|e| e.to_string())
}

/// Decomposition flags shared by `decompose` and `plotdata`.
#[derive(Args)]
struct DecomposeFlags {
    /// Decomposition method.
    #[arg(long, value_enum, default_value_t = MethodArg::Eemd)]
    method: MethodArg,
    /// Ensemble size (EEMD only).
    #[arg(long, default_value_t = 100)]
    ensemble: usize,
    /// Noise amplitude as a fraction of the sample standard deviation
    /// (EEMD only).
    #[arg(long, default_value_t = 0.2)]
    noise_std: f64,
    /// Sifting stop threshold on the normalized squared change.
    #[arg(long, default_value_t = 0.2)]
    sd_threshold: f64,
    /// Cap on sift iterations per mode.
    #[arg(long, default_value_t = 100)]
    max_sift_iters: usize,
    /// Cap on extracted modes: "auto" or a positive integer.
    #[arg(long, default_value = "auto", value_parser = parse_max_imfs)]
    max_imfs: MaxImfs,
    /// Envelope boundary handling.
    #[arg(long, value_enum, default_value_t = BoundaryArg::Mirror)]
    boundary: BoundaryArg,
    /// Value transform applied before decomposing.
    #[arg(long, value_enum, default_value_t = TransformArg::Levels)]
    transform: TransformArg,
}

impl DecomposeFlags {
    fn options(&self) -> DecomposeOptions {
        let sift = modescale::emd::SiftConfig {
            sd_threshold: self.sd_threshold,
            max_sift_iters: self.max_sift_iters,
            max_imfs: self.max_imfs,
            boundary: self.boundary.into(),
        };
        DecomposeOptions {
            method: self.method.into(),
            sift,
            noise_std: self.noise_std,
            ensemble_size: self.ensemble,
            transform: self.transform.into(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decompose panel columns into modes; one CSV + JSON sidecar each.
    Decompose {
        /// Input panel CSV.
        #[arg(long)]
        input: PathBuf,
        /// Column to decompose; repeat for several. Column i uses seed
        /// `--seed + i`.
        #[arg(long = "column", required = true)]
        columns: Vec<String>,
        /// Header of the date column.
        #[arg(long, default_value = "date")]
        date_column: String,
        /// Deflate each column by this price-index column before any other
        /// transform.
        #[arg(long)]
        deflator: Option<String>,
        #[command(flatten)]
        flags: DecomposeFlags,
    },
    /// Per-mode statistics of a stored decomposition.
    Features {
        /// Decomposition CSV (sidecar inferred: same stem, .json).
        #[arg(long)]
        input: PathBuf,
        /// How modes are grouped into horizons.
        #[arg(long, value_enum, default_value_t = HorizonArg::Index)]
        horizon_rule: HorizonArg,
    },
    /// Scale-by-scale OLS of stored decompositions, with hedge/safe-haven
    /// classification.
    Regress {
        /// Dependent series name.
        #[arg(long)]
        dependent: String,
        /// Regressor names, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        regressors: Vec<String>,
        /// Lags of the dependent mode included as controls.
        #[arg(long, default_value_t = 1)]
        lag_dependent: usize,
        /// Significance level for classification.
        #[arg(long, default_value_t = 0.10)]
        alpha: f64,
        /// Heteroskedasticity-consistent (HC1) standard errors.
        #[arg(long)]
        robust_se: bool,
        /// Classification rule.
        #[arg(long, value_enum, default_value_t = TaxonomyArg::ThreeWay)]
        taxonomy: TaxonomyArg,
        /// Directory holding <name>.csv/<name>.json decompositions
        /// (defaults to --out).
        #[arg(long)]
        decomp_dir: Option<PathBuf>,
        /// Transform the decompositions are expected to carry.
        #[arg(long, value_enum, default_value_t = TransformArg::Levels)]
        transform: TransformArg,
    },
    /// Instantaneous amplitude/frequency per mode of a stored
    /// decomposition.
    Hilbert {
        /// Decomposition CSV (sidecar inferred: same stem, .json).
        #[arg(long)]
        input: PathBuf,
    },
    /// Plot-ready CSVs for one column: first sifting envelope and the mode
    /// panel.
    Plotdata {
        /// Input panel CSV.
        #[arg(long)]
        input: PathBuf,
        /// Column to decompose.
        #[arg(long)]
        column: String,
        /// Header of the date column.
        #[arg(long, default_value = "date")]
        date_column: String,
        /// Deflate by this price-index column before any other transform.
        #[arg(long)]
        deflator: Option<String>,
        #[command(flatten)]
        flags: DecomposeFlags,
    },
    /// Run decompose -> features -> regress (-> hilbert, plotdata) from one
    /// config file and write a manifest.
    Pipeline {
        /// Flat key = value config file.
        #[arg(long)]
        config: PathBuf,
    },
}

fn ensure_out_dir(out: &PathBuf) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))
}

fn tag(verb: &str, e: Error) -> Error {
    match e {
        Error::Invalid(m) => Error::Invalid(format!("{verb}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{verb}: {m}")),
        Error::Io(m) => Error::Io(format!("{verb}: {m}")),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decompose {
            input,
            columns,
            date_column,
            deflator,
            flags,
        } => {
            ensure_out_dir(&cli.out)?;
            commands::cmd_decompose(
                &input,
                &date_column,
                &columns,
                deflator.as_deref(),
                &flags.options(),
                cli.seed,
                &cli.out,
            )
            .map_err(|e| tag("decompose", e))?;
        }
        Command::Features {
            input,
            horizon_rule,
        } => {
            ensure_out_dir(&cli.out)?;
            commands::cmd_features(&input, horizon_rule.into(), &cli.out)
                .map_err(|e| tag("features", e))?;
        }
        Command::Regress {
            dependent,
            regressors,
            lag_dependent,
            alpha,
            robust_se,
            taxonomy,
            decomp_dir,
            transform,
        } => {
            ensure_out_dir(&cli.out)?;
            let spec = RegressionSpec {
                dependent,
                regressors,
                lag_dependent,
                alpha,
                robust_se,
                taxonomy: taxonomy.into(),
            };
            let dir = decomp_dir.unwrap_or_else(|| cli.out.clone());
            commands::cmd_regress(&dir, &spec, transform.into(), &cli.out)
                .map_err(|e| tag("regress", e))?;
        }
        Command::Hilbert { input } => {
            ensure_out_dir(&cli.out)?;
            commands::cmd_hilbert(&input, &cli.out).map_err(|e| tag("hilbert", e))?;
        }
        Command::Plotdata {
            input,
            column,
            date_column,
            deflator,
            flags,
        } => {
            ensure_out_dir(&cli.out)?;
            commands::cmd_plotdata(
                &input,
                &date_column,
                &column,
                deflator.as_deref(),
                &flags.options(),
                cli.seed,
                &cli.out,
            )
            .map_err(|e| tag("plotdata", e))?;
        }
        Command::Pipeline { config } => {
            let run_dir = pipeline::cmd_pipeline(&config, &cli.out, cli.seed)
                .map_err(|e| tag("pipeline", e))?;
            log::info!("pipeline complete: {}", run_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not failures.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Invalid(_) | Error::Io(_) => ExitCode::from(1),
                Error::Numerical(_) => ExitCode::from(2),
            }
        }
    }
}
