//! Config-driven end-to-end runs: ingest, aggregate, diagnostics, scaling
//! analyses, and surrogate comparisons, with every artifact indexed in a
//! manifest.
//!
//! A run is fully deterministic: identical config and inputs produce
//! byte-identical outputs and manifest regardless of the worker count, since
//! all parallel reductions accumulate in fixed index order and all
//! randomness is seeded from the config.
//!
//! Output layout: `<outdir>/<pair>/<stage>/<name>.{csv,json}` plus
//! `<outdir>/manifest.json` carrying a content hash of the config. A stage
//! error aborts that pair; completed artifacts are retained and the pair is
//! marked failed in the manifest.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detrend::{cross_surfaces_raw, fluctuation_zz, QGrid, ScaleGrid};
use crate::error::{Error, Result};
use crate::ingest::{self, Dialect, TickSeries};
use crate::mfcca;
use crate::mfdfa::{self, Spectrum};
use crate::series::{self, RegularSeries, SeriesKind};
use crate::stats;
use crate::surrogates::{surrogate, SurrogateKind, SurrogateSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QGridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for QGridSpec {
    fn default() -> Self {
        QGridSpec {
            min: -4.0,
            max: 4.0,
            step: 0.2,
        }
    }
}

impl QGridSpec {
    pub fn build(&self) -> Result<QGrid> {
        QGrid::from_range(self.min, self.max, self.step)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleGridSpec {
    pub s_min: usize,
    /// Upper scale; defaults to a quarter of the series length.
    pub s_max: Option<usize>,
    pub count: usize,
}

impl Default for ScaleGridSpec {
    fn default() -> Self {
        ScaleGridSpec {
            s_min: 16,
            s_max: None,
            count: 40,
        }
    }
}

impl ScaleGridSpec {
    pub fn build(&self, series_len: usize) -> Result<ScaleGrid> {
        let s_max = self.s_max.unwrap_or(series_len / 4);
        crate::fitting::log_scale_grid(self.s_min, s_max, self.count)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub kinds: Vec<SurrogateKind>,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            kinds: vec![SurrogateKind::Shuffle, SurrogateKind::Fourier],
            replicates: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TickInput {
    pub path: PathBuf,
    pub dialect: Dialect,
}

/// One analysis unit: either raw tick files (full market pipeline), a single
/// pre-aggregated series, or an aligned series pair for cross analysis.
/// Exactly one of `ticks`, `series`, or `x`/`y` must be present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairConfig {
    pub pair_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ticks: Option<Vec<TickInput>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<PathBuf>,
}

enum PairInput<'a> {
    Ticks(&'a [TickInput]),
    Series(&'a Path),
    SeriesPair(&'a Path, &'a Path),
}

impl PairConfig {
    fn input(&self) -> Result<PairInput<'_>> {
        match (&self.ticks, &self.series, &self.x, &self.y) {
            (Some(t), None, None, None) if !t.is_empty() => Ok(PairInput::Ticks(t)),
            (None, Some(s), None, None) => Ok(PairInput::Series(s)),
            (None, None, Some(x), Some(y)) => Ok(PairInput::SeriesPair(x, y)),
            _ => Err(Error::InvalidArgument(format!(
                "pair {:?} must set exactly one of: ticks, series, or x + y",
                self.pair_id
            ))),
        }
    }

    fn referenced_paths(&self) -> Vec<&Path> {
        let mut out = Vec::new();
        if let Some(ticks) = &self.ticks {
            out.extend(ticks.iter().map(|t| t.path.as_path()));
        }
        if let Some(s) = &self.series {
            out.push(s.as_path());
        }
        if let Some(x) = &self.x {
            out.push(x.as_path());
        }
        if let Some(y) = &self.y {
            out.push(y.as_path());
        }
        out
    }
}

fn default_dt_ms() -> i64 {
    300_000
}

fn default_volume_threshold() -> f64 {
    0.01
}

fn default_max_lag() -> usize {
    100
}

fn default_xmin_quantile() -> f64 {
    0.99
}

fn default_poly_order() -> usize {
    2
}

fn default_true() -> bool {
    true
}

fn default_rho_q() -> Vec<f64> {
    vec![2.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub outdir: PathBuf,
    #[serde(default = "default_dt_ms")]
    pub dt_ms: i64,
    #[serde(default = "default_volume_threshold")]
    pub volume_threshold_usd: f64,
    #[serde(default)]
    pub dedup: bool,
    /// Write the merged, filtered ticks back out in canonical CSV.
    #[serde(default)]
    pub emit_ticks: bool,
    #[serde(default)]
    pub q_grid: QGridSpec,
    #[serde(default)]
    pub scale_grid: ScaleGridSpec,
    #[serde(default = "default_poly_order")]
    pub poly_order: usize,
    /// Scale fit range for the exponent regressions; defaults to the central
    /// half of the scale grid in log space.
    #[serde(default)]
    pub fit_range: Option<(f64, f64)>,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    #[serde(default = "default_xmin_quantile")]
    pub tail_xmin_quantile: f64,
    #[serde(default = "default_true")]
    pub ccdf_fits: bool,
    #[serde(default = "default_rho_q")]
    pub rho_q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogates: Option<SurrogateConfig>,
    pub pairs: Vec<PairConfig>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|_| Error::MissingFile(path.display().to_string()))?;
        let config: PipelineConfig = serde_json::from_reader(std::io::BufReader::new(f))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt_ms <= 0 {
            return Err(Error::InvalidArgument(format!(
                "dt_ms {} <= 0",
                self.dt_ms
            )));
        }
        if self.volume_threshold_usd < 0.0 {
            return Err(Error::InvalidArgument("negative volume threshold".into()));
        }
        if !(1..=4).contains(&self.poly_order) {
            return Err(Error::InvalidArgument(format!(
                "poly_order {} outside 1..=4",
                self.poly_order
            )));
        }
        if !(0.0..1.0).contains(&self.tail_xmin_quantile) {
            return Err(Error::InvalidArgument(
                "tail_xmin_quantile outside [0, 1)".into(),
            ));
        }
        self.q_grid.build()?;
        if self.pairs.is_empty() {
            return Err(Error::InvalidArgument("no pairs configured".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for pair in &self.pairs {
            pair.input()?;
            if !seen.insert(sanitize(&pair.pair_id)) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate pair directory for {:?}",
                    pair.pair_id
                )));
            }
            for path in pair.referenced_paths() {
                if !path.exists() {
                    return Err(Error::MissingFile(path.display().to_string()));
                }
            }
        }
        if let Some(s) = &self.surrogates {
            if s.replicates == 0 {
                return Err(Error::InvalidArgument("surrogate replicates == 0".into()));
            }
        }
        Ok(())
    }

    /// Content hash of the canonical serialization of this config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub stage: String,
    pub name: String,
    pub path: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub pair_id: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub artifacts: Vec<Artifact>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub pairs: Vec<PairReport>,
}

fn sanitize(pair_id: &str) -> String {
    pair_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Run every configured pair (in parallel when `workers != 1`), write the
/// manifest, and return it. `workers == 0` uses the default thread count.
/// The error of the first failed pair is reported after the manifest has
/// been written.
pub fn run_pipeline(config: &PipelineConfig, workers: usize) -> Result<Manifest> {
    config.validate()?;
    std::fs::create_dir_all(&config.outdir)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;

    let reports: Vec<PairReport> = pool.install(|| {
        config
            .pairs
            .par_iter()
            .map(|pair| run_pair(config, pair))
            .collect()
    });

    let manifest = Manifest {
        config_hash: config.hash(),
        pairs: reports,
    };
    let manifest_path = config.outdir.join("manifest.json");
    let mut f = std::fs::File::create(&manifest_path)?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;

    for report in &manifest.pairs {
        if report.status == "failed" {
            return Err(Error::PipelineFailed {
                pair: report.pair_id.clone(),
                stage: report.failed_stage.clone().unwrap_or_default(),
                detail: report.error.clone().unwrap_or_default(),
            });
        }
    }
    Ok(manifest)
}

struct PairCtx<'a> {
    config: &'a PipelineConfig,
    pair_dir: String,
    artifacts: Vec<Artifact>,
}

impl PairCtx<'_> {
    fn path_for(&self, stage: &str, name: &str) -> Result<(PathBuf, String)> {
        let rel = format!("{}/{}/{}", self.pair_dir, stage, name);
        let abs = self.config.outdir.join(&rel);
        if let Some(parent) = abs.parent() {
            std::fs::create_dir_all(parent)?;
        }
        Ok((abs, rel))
    }

    fn record(&mut self, stage: &str, name: &str, rel: String) {
        self.artifacts.push(Artifact {
            stage: stage.to_string(),
            name: name.to_string(),
            path: rel,
        });
    }

    fn write_json<T: Serialize>(&mut self, stage: &str, name: &str, value: &T) -> Result<()> {
        let (abs, rel) = self.path_for(stage, name)?;
        let f = std::fs::File::create(&abs)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), value)?;
        self.record(stage, name, rel);
        Ok(())
    }

    fn write_with<F>(&mut self, stage: &str, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&Path) -> Result<()>,
    {
        let (abs, rel) = self.path_for(stage, name)?;
        write(&abs)?;
        self.record(stage, name, rel);
        Ok(())
    }
}

fn run_pair(config: &PipelineConfig, pair: &PairConfig) -> PairReport {
    let mut ctx = PairCtx {
        config,
        pair_dir: sanitize(&pair.pair_id),
        artifacts: Vec::new(),
    };
    let result = (|| -> StageResult<()> {
        match pair.input().map_err(|e| ("config".to_string(), e))? {
            PairInput::Ticks(inputs) => run_tick_pair(&mut ctx, &pair.pair_id, inputs),
            PairInput::Series(path) => run_series_pair(&mut ctx, &pair.pair_id, path),
            PairInput::SeriesPair(x, y) => run_cross_pair(&mut ctx, &pair.pair_id, x, y),
        }
    })();

    match result {
        Ok(()) => PairReport {
            pair_id: pair.pair_id.clone(),
            status: "ok".into(),
            failed_stage: None,
            error: None,
            artifacts: ctx.artifacts,
        },
        Err((stage, err)) => {
            log::error!("pair={} stage={} error={}", pair.pair_id, stage, err);
            PairReport {
                pair_id: pair.pair_id.clone(),
                status: "failed".into(),
                failed_stage: Some(stage),
                error: Some(err.to_string()),
                artifacts: ctx.artifacts,
            }
        }
    }
}

type StageResult<T> = std::result::Result<T, (String, Error)>;

fn at<T>(stage: &str, r: Result<T>) -> StageResult<T> {
    r.map_err(|e| (stage.to_string(), e))
}

fn run_tick_pair(ctx: &mut PairCtx, pair_id: &str, inputs: &[TickInput]) -> StageResult<()> {
    let config = ctx.config;
    log::info!("pair={pair_id} stage=ingest inputs={}", inputs.len());

    // Volume filter applied per pool, before merging.
    let mut merged: Option<TickSeries> = None;
    for input in inputs {
        let parsed = at("ingest", ingest::parse_ticks(&input.path, input.dialect))?;
        let filtered = at(
            "ingest",
            ingest::filter_min_volume(&parsed, config.volume_threshold_usd),
        )?;
        merged = Some(match merged {
            None => filtered,
            Some(acc) => ingest::merge_pools(&acc, &filtered),
        });
    }
    let mut ticks = merged.expect("at least one input");
    ticks.pair_id = pair_id.to_string();
    if config.dedup {
        ticks = ingest::dedup_exact(&ticks);
    }

    let stats = at("ingest", ingest::tick_stats(&ticks))?;
    at("ingest", ctx.write_json("ingest", "stats.json", &stats))?;
    if config.emit_ticks {
        at(
            "ingest",
            ctx.write_with("ingest", "ticks.csv", |p| ingest::write_ticks(&ticks, p)),
        )?;
    }

    log::info!("pair={pair_id} stage=aggregate dt_ms={}", config.dt_ms);
    let (returns, volume, report) = at("aggregate", series::aggregate(&ticks, config.dt_ms))?;
    at(
        "aggregate",
        ctx.write_with("aggregate", "returns.json", |p| returns.write_json(p)),
    )?;
    at(
        "aggregate",
        ctx.write_with("aggregate", "returns.csv", |p| returns.write_csv(p)),
    )?;
    at(
        "aggregate",
        ctx.write_with("aggregate", "volume.json", |p| volume.write_json(p)),
    )?;
    at(
        "aggregate",
        ctx.write_with("aggregate", "volume.csv", |p| volume.write_csv(p)),
    )?;
    at(
        "aggregate",
        ctx.write_json("aggregate", "report.json", &report),
    )?;

    let volatility = at("aggregate", series::absolute(&returns))?;

    stage_acf(ctx, "volatility.csv", &volatility)?;
    stage_acf(ctx, "volume.csv", &volume)?;

    stage_ccdf(ctx, "volatility", &volatility)?;
    stage_ccdf(ctx, "volume", &volume)?;

    stage_mfdfa(ctx, "returns", &returns)?;
    stage_mfdfa(ctx, "volume", &volume)?;

    let (vol_aligned, volume_aligned) = at(
        "mfcca",
        mfcca::align_volatility_volume(&volatility, &volume),
    )?;
    stage_mfcca_and_rho(ctx, &vol_aligned, &volume_aligned)?;

    if config.surrogates.is_some() {
        stage_surrogates(ctx, "returns", &returns)?;
        stage_surrogates(ctx, "volume", &volume)?;
    }
    Ok(())
}

fn run_series_pair(ctx: &mut PairCtx, pair_id: &str, path: &Path) -> StageResult<()> {
    log::info!("pair={pair_id} stage=load series={}", path.display());
    let series = at("load", RegularSeries::read_json(path))?;
    stage_acf(ctx, "series.csv", &series)?;
    stage_ccdf(ctx, "series", &series)?;
    stage_mfdfa(ctx, "", &series)?;
    if ctx.config.surrogates.is_some() {
        stage_surrogates(ctx, "", &series)?;
    }
    Ok(())
}

fn run_cross_pair(ctx: &mut PairCtx, pair_id: &str, x: &Path, y: &Path) -> StageResult<()> {
    log::info!(
        "pair={pair_id} stage=load x={} y={}",
        x.display(),
        y.display()
    );
    let xs = at("load", RegularSeries::read_json(x))?;
    let ys = at("load", RegularSeries::read_json(y))?;
    stage_mfdfa(ctx, "x", &xs)?;
    stage_mfdfa(ctx, "y", &ys)?;
    stage_mfcca_and_rho(ctx, &xs, &ys)?;
    Ok(())
}

fn suffixed(base: &str, suffix: &str, ext: &str) -> String {
    if suffix.is_empty() {
        format!("{base}.{ext}")
    } else {
        format!("{base}_{suffix}.{ext}")
    }
}

fn stage_acf(ctx: &mut PairCtx, name: &str, series: &RegularSeries) -> StageResult<()> {
    let max_lag = ctx.config.max_lag.min(series.len().saturating_sub(1));
    let curve = at("acf", stats::acf(series, max_lag))?;
    at(
        "acf",
        ctx.write_with("acf", name, |p| stats::write_acf_csv(&curve, p)),
    )?;
    Ok(())
}

/// CCDF samples in sigma units: log-return series are normalized and folded
/// to absolute values; volume and volatility series are normalized directly.
fn sigma_units(series: &RegularSeries) -> Result<Vec<f64>> {
    let normalized = series::normalize(series)?;
    Ok(match series.kind {
        SeriesKind::LogReturn => normalized.values.iter().map(|v| v.abs()).collect(),
        _ => normalized.values,
    })
}

#[derive(Serialize)]
struct CcdfFitReport {
    power_law: stats::TailFit,
    stretched_exponential: stats::StretchedFit,
}

fn stage_ccdf(ctx: &mut PairCtx, suffix: &str, series: &RegularSeries) -> StageResult<()> {
    let values = at("ccdf", sigma_units(series))?;
    let curve = at("ccdf", stats::ccdf(&values))?;
    at(
        "ccdf",
        ctx.write_with("ccdf", &suffixed("ccdf", suffix, "csv"), |p| {
            curve.write_csv(p)
        }),
    )?;
    if ctx.config.ccdf_fits {
        let positive = curve.restrict_positive();
        if positive.len() < 20 {
            return Err((
                "ccdf".into(),
                Error::TooFewPoints {
                    needed: 20,
                    got: positive.len(),
                    context: "ccdf tail fits",
                },
            ));
        }
        let x_min = positive.quantile_x(ctx.config.tail_xmin_quantile);
        let report = CcdfFitReport {
            power_law: at("ccdf", stats::fit_powerlaw_tail(&positive, x_min))?,
            stretched_exponential: at("ccdf", stats::fit_stretched_exp(&positive))?,
        };
        at(
            "ccdf",
            ctx.write_json("ccdf", &suffixed("fits", suffix, "json"), &report),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MfdfaMetrics {
    hurst: Option<f64>,
    width: f64,
    asymmetry: f64,
    min_r2: f64,
}

fn analysis_grids(ctx: &PairCtx, len: usize) -> Result<(QGrid, ScaleGrid)> {
    let q = ctx.config.q_grid.build()?;
    let scales = ctx.config.scale_grid.build(len)?;
    Ok((q, scales))
}

fn stage_mfdfa(ctx: &mut PairCtx, suffix: &str, series: &RegularSeries) -> StageResult<()> {
    let (q, scales) = at("mfdfa", analysis_grids(ctx, series.len()))?;
    let surf = at(
        "mfdfa",
        fluctuation_zz(series, &q, &scales, ctx.config.poly_order),
    )?;
    at(
        "mfdfa",
        ctx.write_with("mfdfa", &suffixed("fq", suffix, "json"), |p| {
            surf.write_json(p)
        }),
    )?;
    at(
        "mfdfa",
        ctx.write_with("mfdfa", &suffixed("fq", suffix, "csv"), |p| {
            surf.write_csv(p)
        }),
    )?;
    let h = at(
        "mfdfa",
        mfdfa::generalized_hurst(&surf, ctx.config.fit_range),
    )?;
    at(
        "mfdfa",
        ctx.write_with("mfdfa", &suffixed("hq", suffix, "csv"), |p| h.write_csv(p)),
    )?;
    at(
        "mfdfa",
        ctx.write_with("mfdfa", &suffixed("hq", suffix, "json"), |p| {
            h.write_json(p)
        }),
    )?;
    let spec = at("mfdfa", mfdfa::singularity_spectrum(&h))?;
    at(
        "mfdfa",
        ctx.write_with("mfdfa", &suffixed("spectrum", suffix, "csv"), |p| {
            spec.write_csv(p)
        }),
    )?;
    let metrics = MfdfaMetrics {
        hurst: h.hurst(),
        width: spec.width,
        asymmetry: spec.asymmetry,
        min_r2: h.min_r2,
    };
    at(
        "mfdfa",
        ctx.write_json("mfdfa", &suffixed("metrics", suffix, "json"), &metrics),
    )?;
    Ok(())
}

fn qtag(q: f64) -> String {
    if (q - q.round()).abs() < 1e-9 {
        format!("{}", q.round() as i64)
    } else {
        format!("{q}")
    }
}

fn stage_mfcca_and_rho(
    ctx: &mut PairCtx,
    x: &RegularSeries,
    y: &RegularSeries,
) -> StageResult<()> {
    let (q, scales) = at("mfcca", analysis_grids(ctx, x.len()))?;
    let m = ctx.config.poly_order;
    let (fxx, fyy, fxy) = at("mfcca", cross_surfaces_raw(x, y, q.values(), &scales, m))?;

    at(
        "mfcca",
        ctx.write_with("mfcca", "fxy.json", |p| fxy.write_json(p)),
    )?;
    at(
        "mfcca",
        ctx.write_with("mfcca", "fxy.csv", |p| fxy.write_csv(p)),
    )?;

    let hx = at(
        "mfcca",
        mfdfa::generalized_hurst(&fxx, ctx.config.fit_range),
    )?;
    let hy = at(
        "mfcca",
        mfdfa::generalized_hurst(&fyy, ctx.config.fit_range),
    )?;
    at(
        "mfcca",
        ctx.write_with("mfcca", "hq_x.csv", |p| hx.write_csv(p)),
    )?;
    at(
        "mfcca",
        ctx.write_with("mfcca", "hq_y.csv", |p| hy.write_csv(p)),
    )?;
    let avg = at("mfcca", mfcca::avg_hurst(&hx, &hy))?;
    at(
        "mfcca",
        ctx.write_with("mfcca", "avg_hq.csv", |p| avg.write_csv(p)),
    )?;

    match mfcca::lambda_exponent(&fxy, ctx.config.fit_range) {
        Ok(lambda) => {
            at(
                "mfcca",
                ctx.write_with("mfcca", "lambda.json", |p| lambda.write_json(p)),
            )?;
        }
        // An entirely mixed-sign surface carries no cross scaling; report
        // that instead of failing the pair.
        Err(Error::NoScalingDomain) => {
            #[derive(Serialize)]
            struct NoDomain<'a> {
                error: &'a str,
            }
            at(
                "mfcca",
                ctx.write_json(
                    "mfcca",
                    "lambda.json",
                    &NoDomain {
                        error: "no q with a uniform fluctuation sign over the fit range",
                    },
                ),
            )?;
        }
        Err(e) => return Err(("mfcca".into(), e)),
    }

    for &rq in &ctx.config.rho_q {
        let surface = if q.index_of(rq).is_some() {
            at("rho", mfcca::rho_from_surfaces(&fxx, &fyy, &fxy, rq))?
        } else {
            at("rho", mfcca::rho(x, y, rq, &scales, m))?
        };
        let name = format!("rho_q{}.csv", qtag(rq));
        at("rho", ctx.write_with("rho", &name, |p| surface.write_csv(p)))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SurrogateMetrics {
    kind: SurrogateKind,
    replicates: usize,
    width_of_mean_spectrum: f64,
    asymmetry_of_mean_spectrum: f64,
    mean_width: f64,
    mean_asymmetry: f64,
    mean_hurst: Option<f64>,
}

fn stage_surrogates(ctx: &mut PairCtx, suffix: &str, series: &RegularSeries) -> StageResult<()> {
    let cfg = ctx
        .config
        .surrogates
        .clone()
        .expect("caller checked surrogates config");
    let (q, scales) = at("surrogates", analysis_grids(ctx, series.len()))?;

    for kind in &cfg.kinds {
        let mut mean_alpha: Vec<f64> = Vec::new();
        let mut mean_f: Vec<f64> = Vec::new();
        let mut widths = Vec::new();
        let mut asyms = Vec::new();
        let mut hursts = Vec::new();
        for replicate in 0..cfg.replicates {
            let spec = SurrogateSpec::new(*kind, cfg.seed, replicate as u64);
            let surr = at("surrogates", surrogate(series, &spec))?;
            let surf = at(
                "surrogates",
                fluctuation_zz(&surr, &q, &scales, ctx.config.poly_order),
            )?;
            let h = at(
                "surrogates",
                mfdfa::generalized_hurst(&surf, ctx.config.fit_range),
            )?;
            let sp = at("surrogates", mfdfa::singularity_spectrum(&h))?;
            if mean_alpha.is_empty() {
                mean_alpha = vec![0.0; sp.alpha.len()];
                mean_f = vec![0.0; sp.alpha.len()];
            }
            for i in 0..sp.alpha.len() {
                mean_alpha[i] += sp.alpha[i];
                mean_f[i] += sp.f_alpha[i];
            }
            widths.push(sp.width);
            asyms.push(sp.asymmetry);
            if let Some(h2) = h.hurst() {
                hursts.push(h2);
            }
        }
        let n = cfg.replicates as f64;
        for v in mean_alpha.iter_mut().chain(mean_f.iter_mut()) {
            *v /= n;
        }
        let mut mean_spec = Spectrum {
            alpha: mean_alpha,
            f_alpha: mean_f,
            width: 0.0,
            asymmetry: 0.0,
        };
        let metrics = at("surrogates", mfdfa::spectrum_metrics(&mean_spec))?;
        mean_spec.width = metrics.width;
        mean_spec.asymmetry = metrics.asymmetry;

        let kind_tag = match kind {
            SurrogateKind::Shuffle => "shuffle",
            SurrogateKind::Fourier => "fourier",
        };
        let base = if suffix.is_empty() {
            format!("spectrum_{kind_tag}")
        } else {
            format!("spectrum_{suffix}_{kind_tag}")
        };
        at(
            "surrogates",
            ctx.write_with("surrogates", &format!("{base}.csv"), |p| {
                mean_spec.write_csv(p)
            }),
        )?;
        let report = SurrogateMetrics {
            kind: *kind,
            replicates: cfg.replicates,
            width_of_mean_spectrum: mean_spec.width,
            asymmetry_of_mean_spectrum: mean_spec.asymmetry,
            mean_width: widths.iter().sum::<f64>() / n,
            mean_asymmetry: asyms.iter().sum::<f64>() / n,
            mean_hurst: if hursts.is_empty() {
                None
            } else {
                Some(hursts.iter().sum::<f64>() / hursts.len() as f64)
            },
        };
        let name = if suffix.is_empty() {
            format!("metrics_{kind_tag}.json")
        } else {
            format!("metrics_{suffix}_{kind_tag}.json")
        };
        at("surrogates", ctx.write_json("surrogates", &name, &report))?;
    }
    Ok(())
}
