//! Command-line interface: one thin binary over the library, with one
//! subcommand per pipeline stage plus a config-driven `report` runner.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad flags, missing or
//! malformed inputs, invalid grids), 2 on runtime analysis errors.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use multifract::detrend::{fluctuation_zz, QGrid, ScaleGrid};
use multifract::error::Error;
use multifract::ingest::{self, Dialect};
use multifract::mfcca;
use multifract::mfdfa;
use multifract::pipeline::{run_pipeline, PipelineConfig};
use multifract::series::{self, RegularSeries, SeriesKind};
use multifract::stats;
use multifract::surrogates::{surrogate, SurrogateKind, SurrogateSpec};
use multifract::synth;

#[derive(Parser)]
#[command(
    name = "multifract",
    version,
    about = "Multifractal and detrended cross-correlation analysis of market series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, filter, merge, and canonicalize tick files.
    Ingest(IngestArgs),
    /// Aggregate ticks into fixed-interval log-return and volume series.
    Aggregate(AggregateArgs),
    /// Autocorrelation function of a series.
    Acf(AcfArgs),
    /// Complementary cumulative distribution and tail fits.
    Ccdf(CcdfArgs),
    /// Fluctuation surface, h(q), and singularity spectrum of one series.
    Mfdfa(MfdfaArgs),
    /// Cross fluctuation surface, lambda(q), and averaged Hurst of a pair.
    Mfcca(MfccaArgs),
    /// Detrended cross-correlation coefficient rho(q,s) of a pair.
    Rho(RhoArgs),
    /// Shuffled or phase-randomized surrogate of a series.
    Surrogate(SurrogateArgs),
    /// Synthetic benchmark generators.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Run the full pipeline from a JSON config.
    Report(ReportArgs),
}

#[derive(Args)]
struct SeriesInput {
    /// Series file: a JSON series document, or an index,value CSV.
    #[arg(long)]
    input: PathBuf,
    /// Series kind when reading CSV (log-return | volume | volatility).
    #[arg(long, default_value = "log-return")]
    kind: String,
    /// Interval in ms when reading CSV.
    #[arg(long, default_value_t = 1)]
    dt_ms: i64,
    /// Start timestamp in ms when reading CSV.
    #[arg(long, default_value_t = 0)]
    start_ms: i64,
}

#[derive(Args)]
struct IngestArgs {
    /// Input tick file(s); repeat to merge pools.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Dialect per input (generic | binance-aggtrades); one value applies
    /// to all inputs.
    #[arg(long, default_values_t = [String::from("generic")])]
    dialect: Vec<String>,
    /// Drop trades with volume strictly below this many USD.
    #[arg(long, default_value_t = 0.0)]
    min_volume: f64,
    /// Remove exact (timestamp, price, volume) duplicates.
    #[arg(long)]
    dedup: bool,
    /// Canonical CSV output path.
    #[arg(long)]
    output: PathBuf,
    /// Also write summary statistics as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct AggregateArgs {
    /// Canonical tick CSV.
    #[arg(long)]
    input: PathBuf,
    /// Bin width in milliseconds.
    #[arg(long, default_value_t = 300_000)]
    dt_ms: i64,
    /// Directory for returns/volume series and the aggregation report.
    #[arg(long)]
    outdir: PathBuf,
}

#[derive(Args)]
struct AcfArgs {
    #[command(flatten)]
    series: SeriesInput,
    #[arg(long, default_value_t = 100)]
    max_lag: usize,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct CcdfArgs {
    #[command(flatten)]
    series: SeriesInput,
    /// Skip normalization to sigma units.
    #[arg(long)]
    raw: bool,
    /// CCDF curve output (x,p CSV).
    #[arg(long)]
    output: PathBuf,
    /// Also fit the power-law tail and stretched exponential, writing JSON.
    #[arg(long)]
    fits: Option<PathBuf>,
    /// Tail fit threshold as a sample quantile of the curve support.
    #[arg(long, default_value_t = 0.99)]
    xmin_quantile: f64,
    /// Cross-check the tail exponent with a Hill estimate over the k
    /// largest values.
    #[arg(long)]
    hill: Option<usize>,
}

#[derive(Args)]
struct MfdfaArgs {
    #[command(flatten)]
    series: SeriesInput,
    /// Moment grid as min:max:step.
    #[arg(long, default_value = "-4:4:0.2", allow_hyphen_values = true)]
    q: String,
    /// Detrending polynomial order.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Scale grid as s_min:s_max:count; s_max may be `auto` (length / 4).
    #[arg(long, default_value = "16:auto:40")]
    scales: String,
    /// Exponent fit range as s1:s2 (defaults to the central half of the
    /// scale grid in log space).
    #[arg(long)]
    fit: Option<String>,
    #[arg(long)]
    outdir: PathBuf,
}

#[derive(Args)]
struct MfccaArgs {
    /// First series (x) file.
    #[arg(long)]
    x: PathBuf,
    /// Second series (y) file.
    #[arg(long)]
    y: PathBuf,
    /// Treat x as volatility and y as volume, trimming y's leading bin.
    #[arg(long)]
    align_volatility_volume: bool,
    #[arg(long, default_value = "-4:4:0.2", allow_hyphen_values = true)]
    q: String,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value = "16:auto:40")]
    scales: String,
    #[arg(long)]
    fit: Option<String>,
    #[arg(long)]
    outdir: PathBuf,
}

#[derive(Args)]
struct RhoArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    align_volatility_volume: bool,
    /// Moment order.
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    q: f64,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value = "16:auto:40")]
    scales: String,
    /// Output CSV (s,rho).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SurrogateArgs {
    #[command(flatten)]
    series: SeriesInput,
    /// shuffle | fourier
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    /// JSON series output.
    #[arg(long)]
    output: PathBuf,
    /// Optional CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Deterministic binomial multiplicative cascade of length 2^levels.
    Cascade {
        #[arg(long)]
        levels: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Fractional Gaussian noise via circulant embedding.
    Fgn {
        #[arg(long)]
        hurst: f64,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ReportArgs {
    /// Pipeline config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (0 = default).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

enum CliError {
    Validation(String),
    Analysis(Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Analysis(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::Analysis(err) => write!(f, "{err}"),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Input-shaped library errors count as validation; everything else is a
/// runtime analysis failure.
fn classify(err: Error) -> CliError {
    match &err {
        Error::MissingFile(_)
        | Error::MalformedHeader { .. }
        | Error::BadRow { .. }
        | Error::InvalidGrid(_)
        | Error::InvalidArgument(_) => CliError::Validation(err.to_string()),
        _ => CliError::Analysis(err),
    }
}

type CliResult<T> = Result<T, CliError>;

impl SeriesInput {
    fn load(&self) -> CliResult<RegularSeries> {
        load_series(&self.input, &self.kind, self.dt_ms, self.start_ms)
    }
}

fn load_series(path: &Path, kind: &str, dt_ms: i64, start_ms: i64) -> CliResult<RegularSeries> {
    if !path.exists() {
        return Err(invalid(format!("missing file: {}", path.display())));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => RegularSeries::read_json(path).map_err(classify),
        Some("csv") => {
            let kind = parse_kind(kind)?;
            RegularSeries::read_csv(path, start_ms, dt_ms, kind).map_err(classify)
        }
        _ => Err(invalid(format!(
            "{}: expected a .json or .csv series file",
            path.display()
        ))),
    }
}

fn parse_kind(s: &str) -> CliResult<SeriesKind> {
    match s {
        "log-return" | "log_return" => Ok(SeriesKind::LogReturn),
        "volume" => Ok(SeriesKind::Volume),
        "volatility" => Ok(SeriesKind::Volatility),
        other => Err(invalid(format!("unknown series kind {other:?}"))),
    }
}

fn parse_qgrid(spec: &str) -> CliResult<QGrid> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(invalid(format!("q grid {spec:?} is not min:max:step")));
    }
    let min: f64 = parts[0]
        .parse()
        .map_err(|_| invalid(format!("bad q min {:?}", parts[0])))?;
    let max: f64 = parts[1]
        .parse()
        .map_err(|_| invalid(format!("bad q max {:?}", parts[1])))?;
    let step: f64 = parts[2]
        .parse()
        .map_err(|_| invalid(format!("bad q step {:?}", parts[2])))?;
    QGrid::from_range(min, max, step).map_err(classify)
}

fn parse_scales(spec: &str, series_len: usize) -> CliResult<ScaleGrid> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(invalid(format!(
            "scale grid {spec:?} is not s_min:s_max:count"
        )));
    }
    let s_min: usize = parts[0]
        .parse()
        .map_err(|_| invalid(format!("bad s_min {:?}", parts[0])))?;
    let s_max: usize = if parts[1] == "auto" {
        series_len / 4
    } else {
        parts[1]
            .parse()
            .map_err(|_| invalid(format!("bad s_max {:?}", parts[1])))?
    };
    let count: usize = parts[2]
        .parse()
        .map_err(|_| invalid(format!("bad count {:?}", parts[2])))?;
    multifract::fitting::log_scale_grid(s_min, s_max, count).map_err(classify)
}

fn parse_fit(spec: &Option<String>) -> CliResult<Option<(f64, f64)>> {
    let Some(spec) = spec else { return Ok(None) };
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 {
        return Err(invalid(format!("fit range {spec:?} is not s1:s2")));
    }
    let s1: f64 = parts[0]
        .parse()
        .map_err(|_| invalid(format!("bad s1 {:?}", parts[0])))?;
    let s2: f64 = parts[1]
        .parse()
        .map_err(|_| invalid(format!("bad s2 {:?}", parts[1])))?;
    if !(s1 > 0.0 && s2 > s1) {
        return Err(invalid(format!("fit range {spec:?} is empty")));
    }
    Ok(Some((s1, s2)))
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| invalid(format!("{}: {e}", parent.display())))?;
        }
    }
    Ok(())
}

fn write_json_to<T: serde::Serialize>(value: &T, path: &Path) -> CliResult<()> {
    ensure_parent(path)?;
    let f = std::fs::File::create(path).map_err(|e| CliError::Analysis(e.into()))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), value)
        .map_err(|e| CliError::Analysis(e.into()))?;
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own usage text; both genuine errors and
            // --help/--version land here.
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            e.print().expect("stderr");
            std::process::exit(if is_help { 0 } else { 1 });
        }
    };

    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Aggregate(args) => cmd_aggregate(args),
        Command::Acf(args) => cmd_acf(args),
        Command::Ccdf(args) => cmd_ccdf(args),
        Command::Mfdfa(args) => cmd_mfdfa(args),
        Command::Mfcca(args) => cmd_mfcca(args),
        Command::Rho(args) => cmd_rho(args),
        Command::Surrogate(args) => cmd_surrogate(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn cmd_ingest(args: IngestArgs) -> CliResult<()> {
    if args.min_volume < 0.0 {
        return Err(invalid("min volume must be non-negative"));
    }
    let dialects: Vec<Dialect> = if args.dialect.len() == 1 {
        vec![
            Dialect::from_str(&args.dialect[0]).map_err(classify)?;
            args.input.len()
        ]
    } else if args.dialect.len() == args.input.len() {
        args.dialect
            .iter()
            .map(|d| Dialect::from_str(d).map_err(classify))
            .collect::<CliResult<_>>()?
    } else {
        return Err(invalid(format!(
            "{} dialects for {} inputs",
            args.dialect.len(),
            args.input.len()
        )));
    };
    for path in &args.input {
        if !path.exists() {
            return Err(invalid(format!("missing file: {}", path.display())));
        }
    }

    let mut merged: Option<ingest::TickSeries> = None;
    for (path, dialect) in args.input.iter().zip(dialects) {
        let parsed = ingest::parse_ticks(path, dialect).map_err(classify)?;
        let filtered =
            ingest::filter_min_volume(&parsed, args.min_volume).map_err(classify)?;
        merged = Some(match merged {
            None => filtered,
            Some(acc) => ingest::merge_pools(&acc, &filtered),
        });
    }
    let mut ticks = merged.expect("clap enforces at least one input");
    if args.dedup {
        ticks = ingest::dedup_exact(&ticks);
    }
    if ticks.records.is_empty() {
        return Err(CliError::Analysis(Error::Empty(
            "tick series after filtering",
        )));
    }

    ensure_parent(&args.output)?;
    ingest::write_ticks(&ticks, &args.output).map_err(CliError::Analysis)?;
    log::info!(
        "ingest records={} output={}",
        ticks.records.len(),
        args.output.display()
    );
    if let Some(stats_path) = args.stats {
        let stats = ingest::tick_stats(&ticks).map_err(CliError::Analysis)?;
        write_json_to(&stats, &stats_path)?;
    }
    Ok(())
}

fn cmd_aggregate(args: AggregateArgs) -> CliResult<()> {
    if args.dt_ms <= 0 {
        return Err(invalid("dt-ms must be positive"));
    }
    let ticks = ingest::parse_ticks(&args.input, Dialect::Generic).map_err(classify)?;
    let (returns, volume, report) =
        series::aggregate(&ticks, args.dt_ms).map_err(CliError::Analysis)?;
    std::fs::create_dir_all(&args.outdir).map_err(|e| CliError::Analysis(e.into()))?;
    let w = |s: &RegularSeries, stem: &str| -> CliResult<()> {
        s.write_json(&args.outdir.join(format!("{stem}.json")))
            .map_err(CliError::Analysis)?;
        s.write_csv(&args.outdir.join(format!("{stem}.csv")))
            .map_err(CliError::Analysis)
    };
    w(&returns, "returns")?;
    w(&volume, "volume")?;
    write_json_to(&report, &args.outdir.join("report.json"))?;
    log::info!(
        "aggregate bins={} zero_return_fraction={:.4}",
        report.n_bins,
        report.zero_return_fraction
    );
    Ok(())
}

fn cmd_acf(args: AcfArgs) -> CliResult<()> {
    let series = args.series.load()?;
    if args.max_lag < 1 || args.max_lag >= series.len() {
        return Err(invalid(format!(
            "max lag {} outside 1..{}",
            args.max_lag,
            series.len()
        )));
    }
    let curve = stats::acf(&series, args.max_lag).map_err(CliError::Analysis)?;
    ensure_parent(&args.output)?;
    stats::write_acf_csv(&curve, &args.output).map_err(CliError::Analysis)?;
    Ok(())
}

fn cmd_ccdf(args: CcdfArgs) -> CliResult<()> {
    let series = args.series.load()?;
    if !(0.0..1.0).contains(&args.xmin_quantile) {
        return Err(invalid("xmin-quantile must lie in [0, 1)"));
    }
    let values: Vec<f64> = if args.raw {
        series.values.clone()
    } else {
        let normalized = series::normalize(&series).map_err(CliError::Analysis)?;
        match series.kind {
            SeriesKind::LogReturn => normalized.values.iter().map(|v| v.abs()).collect(),
            _ => normalized.values,
        }
    };
    let curve = stats::ccdf(&values).map_err(CliError::Analysis)?;
    ensure_parent(&args.output)?;
    curve.write_csv(&args.output).map_err(CliError::Analysis)?;

    if let Some(fits_path) = args.fits {
        let positive = curve.restrict_positive();
        let x_min = if positive.is_empty() {
            return Err(CliError::Analysis(Error::NonPositive("ccdf support")));
        } else {
            positive.quantile_x(args.xmin_quantile)
        };
        #[derive(serde::Serialize)]
        struct Fits {
            power_law: stats::TailFit,
            stretched_exponential: stats::StretchedFit,
            #[serde(skip_serializing_if = "Option::is_none")]
            hill: Option<stats::TailFit>,
        }
        let hill = match args.hill {
            Some(k) => Some(stats::hill_estimator(&values, k).map_err(CliError::Analysis)?),
            None => None,
        };
        let fits = Fits {
            power_law: stats::fit_powerlaw_tail(&positive, x_min).map_err(CliError::Analysis)?,
            stretched_exponential: stats::fit_stretched_exp(&positive)
                .map_err(CliError::Analysis)?,
            hill,
        };
        write_json_to(&fits, &fits_path)?;
        log::info!(
            "ccdf gamma={:.4} beta={:.4}",
            fits.power_law.gamma,
            fits.stretched_exponential.beta
        );
    }
    Ok(())
}

fn cmd_mfdfa(args: MfdfaArgs) -> CliResult<()> {
    let series = args.series.load()?;
    let q = parse_qgrid(&args.q)?;
    let scales = parse_scales(&args.scales, series.len())?;
    let fit = parse_fit(&args.fit)?;
    std::fs::create_dir_all(&args.outdir).map_err(|e| CliError::Analysis(e.into()))?;

    let surf = fluctuation_zz(&series, &q, &scales, args.m).map_err(CliError::Analysis)?;
    surf.write_json(&args.outdir.join("fq.json"))
        .map_err(CliError::Analysis)?;
    surf.write_csv(&args.outdir.join("fq.csv"))
        .map_err(CliError::Analysis)?;
    let h = mfdfa::generalized_hurst(&surf, fit).map_err(CliError::Analysis)?;
    h.write_csv(&args.outdir.join("hq.csv"))
        .map_err(CliError::Analysis)?;
    h.write_json(&args.outdir.join("hq.json"))
        .map_err(CliError::Analysis)?;
    let spec = mfdfa::singularity_spectrum(&h).map_err(CliError::Analysis)?;
    spec.write_csv(&args.outdir.join("spectrum.csv"))
        .map_err(CliError::Analysis)?;
    #[derive(serde::Serialize)]
    struct Metrics {
        hurst: Option<f64>,
        width: f64,
        asymmetry: f64,
        min_r2: f64,
    }
    write_json_to(
        &Metrics {
            hurst: h.hurst(),
            width: spec.width,
            asymmetry: spec.asymmetry,
            min_r2: h.min_r2,
        },
        &args.outdir.join("metrics.json"),
    )?;
    log::info!(
        "mfdfa h(2)={} width={:.4}",
        h.hurst().map(|v| format!("{v:.4}")).unwrap_or_default(),
        spec.width
    );
    Ok(())
}

fn load_pair(
    x: &Path,
    y: &Path,
    align: bool,
) -> CliResult<(RegularSeries, RegularSeries)> {
    let xs = load_series(x, "log-return", 1, 0)?;
    let ys = load_series(y, "log-return", 1, 0)?;
    if align {
        mfcca::align_volatility_volume(&xs, &ys).map_err(classify)
    } else {
        Ok((xs, ys))
    }
}

fn cmd_mfcca(args: MfccaArgs) -> CliResult<()> {
    let (xs, ys) = load_pair(&args.x, &args.y, args.align_volatility_volume)?;
    let q = parse_qgrid(&args.q)?;
    let scales = parse_scales(&args.scales, xs.len())?;
    let fit = parse_fit(&args.fit)?;
    std::fs::create_dir_all(&args.outdir).map_err(|e| CliError::Analysis(e.into()))?;

    let fxx = fluctuation_zz(&xs, &q, &scales, args.m).map_err(CliError::Analysis)?;
    let fyy = fluctuation_zz(&ys, &q, &scales, args.m).map_err(CliError::Analysis)?;
    let fxy = multifract::detrend::fluctuation_xy(&xs, &ys, &q, &scales, args.m)
        .map_err(CliError::Analysis)?;
    fxy.write_json(&args.outdir.join("fxy.json"))
        .map_err(CliError::Analysis)?;
    fxy.write_csv(&args.outdir.join("fxy.csv"))
        .map_err(CliError::Analysis)?;

    let hx = mfdfa::generalized_hurst(&fxx, fit).map_err(CliError::Analysis)?;
    let hy = mfdfa::generalized_hurst(&fyy, fit).map_err(CliError::Analysis)?;
    hx.write_csv(&args.outdir.join("hq_x.csv"))
        .map_err(CliError::Analysis)?;
    hy.write_csv(&args.outdir.join("hq_y.csv"))
        .map_err(CliError::Analysis)?;
    let avg = mfcca::avg_hurst(&hx, &hy).map_err(CliError::Analysis)?;
    avg.write_csv(&args.outdir.join("avg_hq.csv"))
        .map_err(CliError::Analysis)?;

    let lambda = mfcca::lambda_exponent(&fxy, fit).map_err(CliError::Analysis)?;
    lambda
        .write_json(&args.outdir.join("lambda.json"))
        .map_err(CliError::Analysis)?;
    log::info!(
        "mfcca lambda domain {} of {} positive q",
        lambda.q.len(),
        lambda.sign_profile.len()
    );
    Ok(())
}

fn cmd_rho(args: RhoArgs) -> CliResult<()> {
    let (xs, ys) = load_pair(&args.x, &args.y, args.align_volatility_volume)?;
    let scales = parse_scales(&args.scales, xs.len())?;
    let surface = mfcca::rho(&xs, &ys, args.q, &scales, args.m).map_err(|e| match e {
        Error::Misaligned(_) | Error::LengthMismatch { .. } => invalid(format!(
            "{} and {} are not aligned: {e}",
            args.x.display(),
            args.y.display()
        )),
        other => CliError::Analysis(other),
    })?;
    ensure_parent(&args.output)?;
    surface
        .write_csv(&args.output)
        .map_err(CliError::Analysis)?;
    if !surface.flagged.is_empty() {
        log::warn!("rho flagged scales: {:?}", surface.flagged);
    }
    Ok(())
}

fn cmd_surrogate(args: SurrogateArgs) -> CliResult<()> {
    let series = args.series.load()?;
    let kind = SurrogateKind::from_str(&args.kind).map_err(classify)?;
    let spec = SurrogateSpec::new(kind, args.seed, args.replicate);
    let out = surrogate(&series, &spec).map_err(CliError::Analysis)?;
    ensure_parent(&args.output)?;
    out.write_json(&args.output).map_err(CliError::Analysis)?;
    if let Some(csv) = args.csv {
        ensure_parent(&csv)?;
        out.write_csv(&csv).map_err(CliError::Analysis)?;
    }
    Ok(())
}

fn cmd_synth(args: SynthCommand) -> CliResult<()> {
    let (series, output, csv) = match args {
        SynthCommand::Cascade {
            levels,
            p,
            output,
            csv,
        } => {
            let params = synth::CascadeParams::new(levels, p).map_err(classify)?;
            (synth::binomial_cascade(&params), output, csv)
        }
        SynthCommand::Fgn {
            hurst,
            length,
            seed,
            output,
            csv,
        } => {
            let series = synth::fgn(hurst, length, seed).map_err(classify)?;
            (series, output, csv)
        }
    };
    ensure_parent(&output)?;
    series.write_json(&output).map_err(CliError::Analysis)?;
    if let Some(csv) = csv {
        ensure_parent(&csv)?;
        series.write_csv(&csv).map_err(CliError::Analysis)?;
    }
    log::info!("synth length={} output={}", series.len(), output.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> CliResult<()> {
    let config = PipelineConfig::load(&args.config).map_err(classify)?;
    config.validate().map_err(classify)?;
    let manifest = run_pipeline(&config, args.workers).map_err(CliError::Analysis)?;
    log::info!(
        "report pairs={} manifest={}",
        manifest.pairs.len(),
        config.outdir.join("manifest.json").display()
    );
    Ok(())
}
