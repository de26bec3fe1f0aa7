//! Cross-correlation scaling: the lambda(q) exponent of the signed
//! covariance fluctuation family, the averaged-Hurst benchmark, and the
//! q-dependent detrended correlation coefficient rho(q,s).

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::detrend::{check_aligned, cross_surfaces_raw, FluctuationSurface, ScaleGrid};
use crate::error::{Error, Result};
use crate::fitting;
use crate::mfdfa::{central_fit_range, HurstCurve};
use crate::series::{RegularSeries, SeriesKind};

/// Sign behaviour of F_XY over the fit range for one q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    AllPositive,
    AllNegative,
    Mixed,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignSummary {
    pub q: f64,
    pub class: SignClass,
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// lambda(q) over the q > 0 moments whose cross fluctuation keeps one sign
/// across the fit range; mixed-sign moments are excluded and reported.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaCurve {
    pub q: Vec<f64>,
    pub lambda: Vec<f64>,
    pub stderr: Vec<f64>,
    pub fit_range: (f64, f64),
    /// Sign behaviour of every candidate q > 0, fitted or not.
    pub sign_profile: Vec<SignSummary>,
    /// The q values excluded for mixed signs.
    pub excluded: Vec<f64>,
}

impl LambdaCurve {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), self)?;
        Ok(())
    }
}

/// Detrended cross-correlation coefficient over the scale grid for one q.
/// Scales with a vanishing denominator are flagged and carry NaN.
#[derive(Debug, Clone)]
pub struct RhoSurface {
    pub q: f64,
    pub scales: Vec<usize>,
    pub rho: Vec<f64>,
    pub flagged: Vec<usize>,
}

impl RhoSurface {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "s,rho")?;
        for (s, r) in self.scales.iter().zip(&self.rho) {
            if r.is_finite() {
                writeln!(w, "{s},{r}")?;
            } else {
                writeln!(w, "{s},NaN")?;
            }
        }
        Ok(())
    }
}

/// Fit the scaling exponent of a signed cross surface: per q > 0, the slope
/// of log |F| against log s where F keeps a uniform sign over the fit range
/// (uniformly negative surfaces are fitted as -F).
pub fn lambda_exponent(
    surface: &FluctuationSurface,
    fit_range: Option<(f64, f64)>,
) -> Result<LambdaCurve> {
    if !surface.signed {
        return Err(Error::WrongSurfaceKind {
            expected_signed: true,
        });
    }
    let range = fit_range.unwrap_or_else(|| central_fit_range(surface));
    let scales = surface.scales.scales();

    let mut q_out = Vec::new();
    let mut lambda = Vec::new();
    let mut stderr = Vec::new();
    let mut sign_profile = Vec::new();
    let mut excluded = Vec::new();

    for (qi, &q) in surface.q_grid.values().iter().enumerate() {
        if q <= 1e-12 {
            continue;
        }
        let mut xs = Vec::new();
        let mut fs = Vec::new();
        let (mut pos, mut neg, mut zero) = (0usize, 0usize, 0usize);
        for (si, &s) in scales.iter().enumerate() {
            let sf = s as f64;
            if sf < range.0 || sf > range.1 || !surface.scale_usable(si) {
                continue;
            }
            let f = surface.value(qi, si);
            if f > 0.0 {
                pos += 1;
            } else if f < 0.0 {
                neg += 1;
            } else {
                zero += 1;
            }
            xs.push(sf);
            fs.push(f);
        }
        if xs.len() < 5 {
            return Err(Error::TooFewPoints {
                needed: 5,
                got: xs.len(),
                context: "lambda fit range",
            });
        }
        let class = if neg == 0 && zero == 0 {
            SignClass::AllPositive
        } else if pos == 0 && zero == 0 {
            SignClass::AllNegative
        } else {
            SignClass::Mixed
        };
        sign_profile.push(SignSummary {
            q,
            class,
            positive: pos,
            negative: neg,
            zero,
        });
        match class {
            SignClass::Mixed => excluded.push(q),
            SignClass::AllPositive | SignClass::AllNegative => {
                let mag: Vec<f64> = fs.iter().map(|f| f.abs()).collect();
                let fit = fitting::loglog_fit(&xs, &mag, (range.0, range.1))?;
                q_out.push(q);
                lambda.push(fit.slope);
                stderr.push(fit.slope_stderr);
            }
        }
    }

    if q_out.is_empty() {
        return Err(Error::NoScalingDomain);
    }
    Ok(LambdaCurve {
        q: q_out,
        lambda,
        stderr,
        fit_range: range,
        sign_profile,
        excluded,
    })
}

/// Pointwise mean of two Hurst curves on identical q grids; the standard
/// errors combine as half the root sum of squares.
pub fn avg_hurst(hx: &HurstCurve, hy: &HurstCurve) -> Result<HurstCurve> {
    if hx.q.len() != hy.q.len() {
        return Err(Error::LengthMismatch {
            left: hx.q.len(),
            right: hy.q.len(),
        });
    }
    if hx.q.iter().zip(&hy.q).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::Misaligned("hurst curves on different q grids".into()));
    }
    Ok(HurstCurve {
        q: hx.q.clone(),
        h: hx
            .h
            .iter()
            .zip(&hy.h)
            .map(|(a, b)| 0.5 * (a + b))
            .collect(),
        stderr: hx
            .stderr
            .iter()
            .zip(&hy.stderr)
            .map(|(a, b)| 0.5 * (a * a + b * b).sqrt())
            .collect(),
        fit_range: hx.fit_range,
        min_r2: hx.min_r2.min(hy.min_r2),
    })
}

/// rho(q,s): the ratio of the q-th order detrended covariance to the
/// geometric mean of the q-th order detrended variances, per scale. In
/// surface terms that is `sign(F_XY) |F_XY|^q / sqrt(F_XX^q F_YY^q)`, which
/// undoes the outer 1/q power so that q = 2 is the detrended analogue of
/// the Pearson coefficient, bounded by 1 through Cauchy-Schwarz. The sign
/// is carried from the cross surface. Requires aligned inputs (same start,
/// interval, and length).
pub fn rho(
    x: &RegularSeries,
    y: &RegularSeries,
    q: f64,
    scales: &ScaleGrid,
    m: usize,
) -> Result<RhoSurface> {
    check_aligned(x, y)?;
    let (xx, yy, xy) = cross_surfaces_raw(x, y, &[q], scales, m)?;
    rho_from_rows(q, scales, xx.row(0), yy.row(0), xy.row(0))
}

/// rho extracted from three precomputed surfaces sharing grids; `q` must be
/// on the surfaces' q grid.
pub fn rho_from_surfaces(
    fxx: &FluctuationSurface,
    fyy: &FluctuationSurface,
    fxy: &FluctuationSurface,
    q: f64,
) -> Result<RhoSurface> {
    let qi = fxy
        .q_grid
        .index_of(q)
        .ok_or_else(|| Error::InvalidArgument(format!("q {q} not on the surface grid")))?;
    if fxx.scales.scales() != fxy.scales.scales() || fyy.scales.scales() != fxy.scales.scales() {
        return Err(Error::Misaligned("surfaces on different scale grids".into()));
    }
    rho_from_rows(q, &fxy.scales, fxx.row(qi), fyy.row(qi), fxy.row(qi))
}

fn rho_from_rows(
    q: f64,
    scales: &ScaleGrid,
    fxx: &[f64],
    fyy: &[f64],
    fxy: &[f64],
) -> Result<RhoSurface> {
    let mut rho = Vec::with_capacity(scales.len());
    let mut flagged = Vec::new();
    for si in 0..scales.len() {
        // Undo the outer 1/q power of the fluctuation functions; the q = 0
        // (logarithmic) surfaces are already covariance-level quantities.
        let (num, den) = if q.abs() < 1e-12 {
            (fxy[si], (fxx[si] * fyy[si]).sqrt())
        } else {
            let sign = if fxy[si] < 0.0 { -1.0 } else { 1.0 };
            (
                sign * fxy[si].abs().powf(q),
                (fxx[si].powf(q) * fyy[si].powf(q)).sqrt(),
            )
        };
        if !(den > 0.0) || !den.is_finite() || !num.is_finite() {
            flagged.push(scales.scales()[si]);
            rho.push(f64::NAN);
        } else {
            rho.push(num / den);
        }
    }
    Ok(RhoSurface {
        q,
        scales: scales.scales().to_vec(),
        rho,
        flagged,
    })
}

/// Pair a volatility series (one per return interval) with a volume series
/// (one per bin) by dropping the volume bin that precedes the first return,
/// so both cover the same intervals. Inputs already aligned are passed
/// through unchanged.
pub fn align_volatility_volume(
    volatility: &RegularSeries,
    volume: &RegularSeries,
) -> Result<(RegularSeries, RegularSeries)> {
    if volatility.kind != SeriesKind::Volatility {
        return Err(Error::KindMismatch {
            expected: "volatility",
            got: volatility.kind.to_string(),
        });
    }
    if volume.kind != SeriesKind::Volume {
        return Err(Error::KindMismatch {
            expected: "volume",
            got: volume.kind.to_string(),
        });
    }
    if volatility.dt_ms != volume.dt_ms {
        return Err(Error::Misaligned(format!(
            "interval mismatch: {} vs {}",
            volatility.dt_ms, volume.dt_ms
        )));
    }
    if volatility.start_ms == volume.start_ms && volatility.len() == volume.len() {
        return Ok((volatility.clone(), volume.clone()));
    }
    let expected_start = volume.start_ms + volume.dt_ms;
    if volatility.start_ms == expected_start && volatility.len() + 1 == volume.len() {
        let mut trimmed = volume.clone();
        trimmed.values.remove(0);
        trimmed.start_ms = expected_start;
        return Ok((volatility.clone(), trimmed));
    }
    Err(Error::Misaligned(format!(
        "volatility (start {}, len {}) does not match volume (start {}, len {})",
        volatility.start_ms,
        volatility.len(),
        volume.start_ms,
        volume.len()
    )))
}
