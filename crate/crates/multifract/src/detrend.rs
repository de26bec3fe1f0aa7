//! Detrended-fluctuation engine shared by the single-series and
//! cross-correlation analyses.
//!
//! The pipeline is: integrate the mean-subtracted series into a profile,
//! cover it with `M_s = floor(T/s)` non-overlapping windows of length `s`
//! from each end (2·M_s segments total), remove a least-squares polynomial
//! trend of order `m` inside every window, and average the detrended
//! segment variances (or covariances, for a pair of series) raised to the
//! power q/2 into the fluctuation family F(q,s).
//!
//! For q = 0 the power mean degenerates and the logarithmic form
//! `F(0,s) = exp(mean(ln f2) / 2)` is used. Cross-covariances keep their
//! sign: each segment contributes `sign(f2)·|f2|^(q/2)` and the outer
//! `1/q` power is applied to the magnitude of the signed average, so a
//! systematically negative covariance yields a negative F.
//!
//! Segments whose variance is numerically indistinguishable from zero
//! (below 1e-22 of the per-scale mean magnitude; they arise from long runs
//! of identical values) would dominate negative moments, so they are
//! dropped from the q <= 0 averages and counted per scale. A scale where
//! more than 1% of segments drop is flagged unusable.

use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::RegularSeries;

/// Threshold, relative to the per-scale mean |f2|, below which a segment
/// variance is treated as zero.
const ZERO_VARIANCE_REL: f64 = 1e-22;

/// Fraction of dropped segments above which a scale is flagged unusable.
const MAX_DROP_FRACTION: f64 = 0.01;

/// Moment orders for the fluctuation family. Strictly increasing and must
/// contain q = 2 so the standard Hurst exponent is always available.
#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct QGrid {
    values: Vec<f64>,
}

impl QGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGrid("empty q grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite q".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("q grid not strictly increasing".into()));
        }
        if !values.iter().any(|&v| (v - 2.0).abs() < 1e-9) {
            return Err(Error::InvalidGrid("q grid must contain q = 2".into()));
        }
        Ok(QGrid { values })
    }

    /// Evenly spaced grid `min, min+step, ..., max`.
    pub fn from_range(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !min.is_finite() || !max.is_finite() || min >= max {
            return Err(Error::InvalidGrid(format!(
                "bad q range {min}:{max}:{step}"
            )));
        }
        let n = ((max - min) / step).round() as usize;
        let mut values = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let q = min + step * i as f64;
            if q <= max + 1e-9 {
                values.push(q);
            }
        }
        QGrid::new(values)
    }

    /// The default analysis grid: q from -4 to 4 in steps of 0.2.
    pub fn default_grid() -> Self {
        QGrid::from_range(-4.0, 4.0, 0.2).expect("default grid is valid")
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

    /// Index of the grid point closest to `q` within 1e-9, if any.
    pub fn index_of(&self, q: f64) -> Option<usize> {
        self.values.iter().position(|&v| (v - q).abs() < 1e-9)
    }
}

/// Window lengths for the fluctuation functions. Strictly increasing
/// integers, each at least 2.
#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct ScaleGrid {
    scales: Vec<usize>,
}

impl ScaleGrid {
    pub fn new(scales: Vec<usize>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidGrid("empty scale grid".into()));
        }
        if scales[0] < 2 {
            return Err(Error::InvalidGrid(format!("scale {} < 2", scales[0])));
        }
        if scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(
                "scale grid not strictly increasing".into(),
            ));
        }
        Ok(ScaleGrid { scales })
    }

    /// Default grid for a series of length `len`: 40 log-spaced scales from
    /// 16 to len/4.
    pub fn default_for_len(len: usize) -> Result<Self> {
        crate::fitting::log_scale_grid(16, (len / 4).max(17), 40)
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn min(&self) -> usize {
        self.scales[0]
    }

    pub fn max(&self) -> usize {
        *self.scales.last().unwrap()
    }
}

/// F(q,s) over a q-grid and a scale grid.
///
/// `signed` marks cross-covariance surfaces, where F may be negative.
/// `dropped` counts the zero-variance segments excluded per scale;
/// a scale is usable when its drop fraction stays within 1%.
#[derive(Debug, Clone, Serialize)]
pub struct FluctuationSurface {
    pub q_grid: QGrid,
    pub scales: ScaleGrid,
    /// Row-major values, one row per q, one column per scale.
    pub values: Vec<f64>,
    pub signed: bool,
    /// Zero-variance segments dropped per scale.
    pub dropped: Vec<usize>,
    /// Total segments (2 M_s) per scale.
    pub segments: Vec<usize>,
}

impl FluctuationSurface {
    pub fn value(&self, qi: usize, si: usize) -> f64 {
        self.values[qi * self.scales.len() + si]
    }

    pub fn row(&self, qi: usize) -> &[f64] {
        let w = self.scales.len();
        &self.values[qi * w..(qi + 1) * w]
    }

    /// True when at most 1% of the segments at scale index `si` were dropped.
    pub fn scale_usable(&self, si: usize) -> bool {
        (self.dropped[si] as f64) <= MAX_DROP_FRACTION * self.segments[si] as f64
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), self)?;
        Ok(())
    }

    /// Long-form CSV: one `q,s,F` row per surface entry.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "q,s,F")?;
        for (qi, &q) in self.q_grid.values().iter().enumerate() {
            for (si, &s) in self.scales.scales().iter().enumerate() {
                writeln!(w, "{},{},{}", q, s, self.value(qi, si))?;
            }
        }
        Ok(())
    }
}

/// Cumulative sum of the mean-subtracted series.
pub fn profile(values: &[f64]) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for &v in values {
        acc += v - mean;
        out.push(acc);
    }
    out
}

/// Non-overlapping windows of length `s` taken from both ends of a series
/// of length `t`: `M_s = floor(t/s)` forward windows anchored at the start,
/// plus `M_s` windows anchored at the end, in ascending order.
pub fn segment_bounds(t: usize, s: usize) -> Result<Vec<Range<usize>>> {
    if s == 0 || s > t {
        return Err(Error::ScaleTooLarge { scale: s, len: t });
    }
    let m = t / s;
    let mut out = Vec::with_capacity(2 * m);
    for v in 0..m {
        out.push(v * s..(v + 1) * s);
    }
    for v in 0..m {
        let end = t - (m - 1 - v) * s;
        out.push(end - s..end);
    }
    Ok(out)
}

/// Orthonormal polynomial basis of degree `m` over `s` evenly spaced points
/// mapped to [-1, 1], built by twice-iterated Gram-Schmidt. Columns are the
/// basis vectors.
fn orthonormal_basis(s: usize, m: usize) -> Result<Vec<Vec<f64>>> {
    let t: Vec<f64> = if s == 1 {
        vec![0.0]
    } else {
        (0..s)
            .map(|i| 2.0 * i as f64 / (s - 1) as f64 - 1.0)
            .collect()
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let mut u: Vec<f64> = t.iter().map(|&x| x.powi(j as i32)).collect();
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&u).map(|(a, b)| a * b).sum();
                for (ui, qi) in u.iter_mut().zip(q) {
                    *ui -= c * qi;
                }
            }
        }
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "ill-conditioned polynomial fit: order {m} over {s} points"
            )));
        }
        for v in &mut u {
            *v /= norm;
        }
        basis.push(u);
    }
    Ok(basis)
}

fn residual_into(basis: &[Vec<f64>], y: &[f64], out: &mut [f64]) {
    out.copy_from_slice(y);
    for q in basis {
        let c: f64 = q.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
        for (oi, qi) in out.iter_mut().zip(q) {
            *oi -= c * qi;
        }
    }
}

/// Residuals of the order-`m` least-squares polynomial fit to the profile
/// values inside `range`.
pub fn detrend_segment(profile: &[f64], range: Range<usize>, m: usize) -> Result<Vec<f64>> {
    let s = range.len();
    if range.end > profile.len() || s == 0 {
        return Err(Error::ScaleTooLarge {
            scale: s,
            len: profile.len(),
        });
    }
    if s < m + 2 {
        return Err(Error::TooFewPoints {
            needed: m + 2,
            got: s,
            context: "polynomial detrending",
        });
    }
    let basis = orthonormal_basis(s, m)?;
    let mut out = vec![0.0; s];
    residual_into(&basis, &profile[range], &mut out);
    Ok(out)
}

/// Mean of the elementwise residual products; with `rx == ry` this is the
/// segment variance.
pub fn segment_cov(rx: &[f64], ry: &[f64]) -> Result<f64> {
    if rx.len() != ry.len() {
        return Err(Error::LengthMismatch {
            left: rx.len(),
            right: ry.len(),
        });
    }
    if rx.is_empty() {
        return Err(Error::Empty("segment covariance"));
    }
    Ok(rx.iter().zip(ry).map(|(a, b)| a * b).sum::<f64>() / rx.len() as f64)
}

fn validate_fluct_args(t: usize, scales: &ScaleGrid, m: usize) -> Result<()> {
    if !(1..=4).contains(&m) {
        return Err(Error::InvalidArgument(format!(
            "polynomial order {m} outside 1..=4"
        )));
    }
    if scales.min() < 2 * (m + 1) {
        return Err(Error::InvalidGrid(format!(
            "minimum scale {} below 2(m+1) = {}",
            scales.min(),
            2 * (m + 1)
        )));
    }
    if scales.max() > t {
        return Err(Error::ScaleTooLarge {
            scale: scales.max(),
            len: t,
        });
    }
    Ok(())
}

/// Per-scale segment covariances of two profiles (variances when `px == py`),
/// in segment order.
fn covariances_by_scale(
    px: &[f64],
    py: &[f64],
    scales: &ScaleGrid,
    m: usize,
) -> Result<Vec<Vec<f64>>> {
    let t = px.len();
    scales
        .scales()
        .par_iter()
        .map(|&s| {
            let bounds = segment_bounds(t, s)?;
            let basis = orthonormal_basis(s, m)?;
            let same = std::ptr::eq(px, py);
            let mut rx = vec![0.0; s];
            let mut ry = vec![0.0; s];
            let mut f2 = Vec::with_capacity(bounds.len());
            for range in bounds {
                residual_into(&basis, &px[range.clone()], &mut rx);
                if same {
                    f2.push(segment_cov(&rx, &rx)?);
                } else {
                    residual_into(&basis, &py[range], &mut ry);
                    f2.push(segment_cov(&rx, &ry)?);
                }
            }
            Ok(f2)
        })
        .collect()
}

/// q-order aggregation of per-scale segment (co)variances into F(q,s).
fn aggregate_surface(
    qs: &[f64],
    scales: &ScaleGrid,
    cov: &[Vec<f64>],
    signed: bool,
) -> Result<FluctuationSurface> {
    let n_s = scales.len();
    let mut values = vec![0.0; qs.len() * n_s];
    let mut dropped = vec![0usize; n_s];
    let mut segments = vec![0usize; n_s];

    for (si, f2s) in cov.iter().enumerate() {
        let total = f2s.len();
        segments[si] = total;
        let mean_abs = f2s.iter().map(|v| v.abs()).sum::<f64>() / total as f64;
        let thr = ZERO_VARIANCE_REL * mean_abs;
        let kept: Vec<f64> = f2s.iter().copied().filter(|v| v.abs() > thr).collect();
        dropped[si] = total - kept.len();
        if kept.is_empty() {
            return Err(Error::DegenerateScale {
                scale: scales.scales()[si],
            });
        }
        for (qi, &q) in qs.iter().enumerate() {
            let f = if q.abs() < 1e-12 {
                // Logarithmic limit of the power mean.
                let mean_ln =
                    kept.iter().map(|v| v.abs().ln()).sum::<f64>() / kept.len() as f64;
                let sign_sum: f64 = kept.iter().map(|v| sign_of(*v)).sum();
                sign_of(sign_sum) * (0.5 * mean_ln).exp()
            } else if q > 0.0 {
                let mean = f2s
                    .iter()
                    .map(|&v| sign_of(v) * v.abs().powf(q / 2.0))
                    .sum::<f64>()
                    / total as f64;
                signed_pow(mean, 1.0 / q)
            } else {
                let mean = kept
                    .iter()
                    .map(|&v| sign_of(v) * v.abs().powf(q / 2.0))
                    .sum::<f64>()
                    / kept.len() as f64;
                signed_pow(mean, 1.0 / q)
            };
            values[qi * n_s + si] = f;
        }
    }

    Ok(FluctuationSurface {
        q_grid: QGrid {
            values: qs.to_vec(),
        },
        scales: scales.clone(),
        values,
        signed,
        dropped,
        segments,
    })
}

fn sign_of(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn signed_pow(v: f64, e: f64) -> f64 {
    sign_of(v) * v.abs().powf(e)
}

/// Raw-q variant of [`fluctuation_zz`] used internally where the q set does
/// not form a full analysis grid (e.g. a single q for rho).
pub(crate) fn fluctuation_zz_raw(
    series: &RegularSeries,
    qs: &[f64],
    scales: &ScaleGrid,
    m: usize,
) -> Result<FluctuationSurface> {
    validate_fluct_args(series.values.len(), scales, m)?;
    let p = profile(&series.values);
    let cov = covariances_by_scale(&p, &p, scales, m)?;
    aggregate_surface(qs, scales, &cov, false)
}

pub(crate) fn fluctuation_xy_raw(
    x: &RegularSeries,
    y: &RegularSeries,
    qs: &[f64],
    scales: &ScaleGrid,
    m: usize,
) -> Result<FluctuationSurface> {
    check_aligned(x, y)?;
    validate_fluct_args(x.values.len(), scales, m)?;
    let px = profile(&x.values);
    let py = profile(&y.values);
    let cov = covariances_by_scale(&px, &py, scales, m)?;
    aggregate_surface(qs, scales, &cov, true)
}

pub(crate) fn check_aligned(x: &RegularSeries, y: &RegularSeries) -> Result<()> {
    if x.values.len() != y.values.len() {
        return Err(Error::LengthMismatch {
            left: x.values.len(),
            right: y.values.len(),
        });
    }
    if x.dt_ms != y.dt_ms || x.start_ms != y.start_ms {
        return Err(Error::Misaligned(format!(
            "start/interval mismatch: ({}, {}) vs ({}, {})",
            x.start_ms, x.dt_ms, y.start_ms, y.dt_ms
        )));
    }
    Ok(())
}

/// Single-series fluctuation family F_ZZ(q,s). Strictly positive.
pub fn fluctuation_zz(
    series: &RegularSeries,
    q: &QGrid,
    scales: &ScaleGrid,
    m: usize,
) -> Result<FluctuationSurface> {
    fluctuation_zz_raw(series, q.values(), scales, m)
}

/// Signed cross-covariance fluctuation family F_XY(q,s) for an aligned pair.
pub fn fluctuation_xy(
    x: &RegularSeries,
    y: &RegularSeries,
    q: &QGrid,
    scales: &ScaleGrid,
    m: usize,
) -> Result<FluctuationSurface> {
    fluctuation_xy_raw(x, y, q.values(), scales, m)
}

/// All three fluctuation families of a pair from a single detrending pass:
/// both variance surfaces plus the signed cross surface.
pub(crate) fn cross_surfaces_raw(
    x: &RegularSeries,
    y: &RegularSeries,
    qs: &[f64],
    scales: &ScaleGrid,
    m: usize,
) -> Result<(FluctuationSurface, FluctuationSurface, FluctuationSurface)> {
    check_aligned(x, y)?;
    validate_fluct_args(x.values.len(), scales, m)?;
    let px = profile(&x.values);
    let py = profile(&y.values);
    let t = px.len();

    // One residual pass per scale computes all three covariance rows.
    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = scales
        .scales()
        .par_iter()
        .map(|&s| {
            let bounds = segment_bounds(t, s)?;
            let basis = orthonormal_basis(s, m)?;
            let mut rx = vec![0.0; s];
            let mut ry = vec![0.0; s];
            let mut xx = Vec::with_capacity(bounds.len());
            let mut yy = Vec::with_capacity(bounds.len());
            let mut xy = Vec::with_capacity(bounds.len());
            for range in bounds {
                residual_into(&basis, &px[range.clone()], &mut rx);
                residual_into(&basis, &py[range], &mut ry);
                xx.push(segment_cov(&rx, &rx)?);
                yy.push(segment_cov(&ry, &ry)?);
                xy.push(segment_cov(&rx, &ry)?);
            }
            Ok((xx, yy, xy))
        })
        .collect::<Result<_>>()?;

    let cov_xx: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
    let cov_yy: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
    let cov_xy: Vec<Vec<f64>> = rows.iter().map(|r| r.2.clone()).collect();

    Ok((
        aggregate_surface(qs, scales, &cov_xx, false)?,
        aggregate_surface(qs, scales, &cov_yy, false)?,
        aggregate_surface(qs, scales, &cov_xy, true)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{RegularSeries, SeriesKind};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(values: Vec<f64>) -> RegularSeries {
        RegularSeries::new(0, 1, SeriesKind::LogReturn, values).unwrap()
    }

    fn white_noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random_range(0.0..1.0f64);
                let v: f64 = rng.random_range(0.0..1.0f64);
                (-2.0 * u.max(1e-300).ln()).sqrt() * (std::f64::consts::TAU * v).cos()
            })
            .collect()
    }

    #[test]
    fn profile_of_constant_is_zero() {
        assert_eq!(profile(&[1.0, 1.0, 1.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn profile_telescopes() {
        assert_eq!(profile(&[1.0, -1.0, 1.0, -1.0]), vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn profile_reversal_mirrors() {
        let x = vec![0.3, -1.2, 2.0, 0.7, -0.4, 1.1];
        let px = profile(&x);
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        let pr = profile(&rev);
        // profile(reverse)[i] = total - profile[T-2-i] where total = 0 after
        // mean subtraction, up to the final cumulative point.
        for i in 0..x.len() - 1 {
            assert_relative_eq!(pr[i], -px[x.len() - 2 - i], epsilon = 1e-12);
        }
    }

    #[test]
    fn segment_bounds_two_ended() {
        let b = segment_bounds(10, 3).unwrap();
        assert_eq!(
            b,
            vec![0..3, 3..6, 6..9, 1..4, 4..7, 7..10]
        );
    }

    #[test]
    fn segment_bounds_exact_division() {
        let b = segment_bounds(9, 3).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(&b[..3], &b[3..]);
    }

    #[test]
    fn segment_bounds_degenerate_full_scale() {
        let b = segment_bounds(8, 8).unwrap();
        assert_eq!(b, vec![0..8, 0..8]);
        assert!(segment_bounds(8, 9).is_err());
    }

    #[test]
    fn segment_bounds_coverage() {
        // Interior indices covered at least once and at most twice.
        for (t, s) in [(100, 7), (64, 16), (33, 5)] {
            let b = segment_bounds(t, s).unwrap();
            let mut cover = vec![0u32; t];
            for r in b {
                for i in r {
                    cover[i] += 1;
                }
            }
            let m = t / s;
            let lo = t - m * s; // indices below the backward anchor
            for (i, &c) in cover.iter().enumerate() {
                if i >= lo && i < m * s {
                    assert!((1..=2).contains(&c), "index {i} covered {c} times");
                } else {
                    assert!(c <= 2);
                }
            }
        }
    }

    #[test]
    fn detrend_exact_quadratic_is_zero() {
        let prof: Vec<f64> = (0..50)
            .map(|i| {
                let x = i as f64;
                3.0 + 0.5 * x - 0.02 * x * x
            })
            .collect();
        let r = detrend_segment(&prof, 10..40, 2).unwrap();
        let scale = prof.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(r.iter().all(|v| v.abs() < 1e-9 * scale));
    }

    #[test]
    fn detrend_nested_models_on_linear_profile() {
        let prof: Vec<f64> = (0..30).map(|i| 1.0 + 2.0 * i as f64).collect();
        let r1 = detrend_segment(&prof, 0..30, 1).unwrap();
        let r2 = detrend_segment(&prof, 0..30, 2).unwrap();
        for (a, b) in r1.iter().zip(&r2) {
            assert!(a.abs() < 1e-9 && b.abs() < 1e-9);
        }
    }

    #[test]
    fn detrend_residuals_orthogonal_to_basis() {
        let prof = profile(&white_noise(200, 3));
        let range = 20..84;
        let m = 2;
        let r = detrend_segment(&prof, range.clone(), m).unwrap();
        let basis = orthonormal_basis(range.len(), m).unwrap();
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        for q in &basis {
            let dot: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-8 * rnorm.max(1.0));
        }
    }

    #[test]
    fn detrend_rejects_short_segment() {
        let prof = vec![1.0; 10];
        assert!(matches!(
            detrend_segment(&prof, 0..3, 2),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn segment_cov_cases() {
        assert_relative_eq!(segment_cov(&[1.0, -1.0], &[1.0, -1.0]).unwrap(), 1.0);
        assert_relative_eq!(segment_cov(&[1.0, -1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_relative_eq!(segment_cov(&[1.0, 1.0], &[-1.0, -1.0]).unwrap(), -1.0);
        assert!(segment_cov(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn fzz_monotone_in_q() {
        let x = series(white_noise(4096, 7));
        let q = QGrid::default_grid();
        let scales = crate::fitting::log_scale_grid(16, 1024, 12).unwrap();
        let surf = fluctuation_zz(&x, &q, &scales, 2).unwrap();
        for si in 0..scales.len() {
            for qi in 1..q.len() {
                assert!(
                    surf.value(qi, si) >= surf.value(qi - 1, si) - 1e-12,
                    "F not monotone at scale index {si}"
                );
            }
        }
    }

    #[test]
    fn fzz_positive_and_homogeneous() {
        let vals = white_noise(2048, 11);
        let x = series(vals.clone());
        let x2 = series(vals.iter().map(|v| 2.0 * v).collect());
        let q = QGrid::default_grid();
        let scales = crate::fitting::log_scale_grid(16, 512, 10).unwrap();
        let a = fluctuation_zz(&x, &q, &scales, 2).unwrap();
        let b = fluctuation_zz(&x2, &q, &scales, 2).unwrap();
        for (va, vb) in a.values.iter().zip(&b.values) {
            assert!(*va > 0.0);
            assert_relative_eq!(*vb, 2.0 * *va, max_relative = 1e-12);
        }
    }

    #[test]
    fn fzz_white_noise_scaling_near_half() {
        let x = series(white_noise(1 << 16, 21));
        let q = QGrid::new(vec![2.0]).unwrap();
        let scales = crate::fitting::log_scale_grid(16, 1 << 14, 20).unwrap();
        let surf = fluctuation_zz(&x, &q, &scales, 2).unwrap();
        let s: Vec<f64> = scales.scales().iter().map(|&v| v as f64).collect();
        let fit = crate::fitting::loglog_fit(&s, surf.row(0), (16.0, 16384.0)).unwrap();
        assert!(
            (fit.slope - 0.5).abs() < 0.03,
            "white-noise slope {}",
            fit.slope
        );
    }

    #[test]
    fn fxy_reduces_to_fzz_for_self_pair() {
        let x = series(white_noise(2048, 5));
        let q = QGrid::default_grid();
        let scales = crate::fitting::log_scale_grid(16, 512, 8).unwrap();
        let zz = fluctuation_zz(&x, &q, &scales, 2).unwrap();
        let xy = fluctuation_xy(&x, &x, &q, &scales, 2).unwrap();
        assert_eq!(zz.values, xy.values);
        assert!(xy.signed);
        assert!(!zz.signed);
    }

    #[test]
    fn fxy_antisymmetric_under_negation() {
        let x = series(white_noise(2048, 9));
        let neg = series(x.values.iter().map(|v| -v).collect());
        let q = QGrid::default_grid();
        let scales = crate::fitting::log_scale_grid(16, 512, 8).unwrap();
        let xx = fluctuation_zz(&x, &q, &scales, 2).unwrap();
        let xy = fluctuation_xy(&x, &neg, &q, &scales, 2).unwrap();
        for (a, b) in xx.values.iter().zip(&xy.values) {
            assert_relative_eq!(*b, -*a, max_relative = 1e-12);
        }
    }

    #[test]
    fn fxy_symmetric_in_arguments() {
        let x = series(white_noise(1024, 13));
        let y = series(white_noise(1024, 14));
        let q = QGrid::default_grid();
        let scales = crate::fitting::log_scale_grid(16, 256, 6).unwrap();
        let a = fluctuation_xy(&x, &y, &q, &scales, 2).unwrap();
        let b = fluctuation_xy(&y, &x, &q, &scales, 2).unwrap();
        for (va, vb) in a.values.iter().zip(&b.values) {
            assert_relative_eq!(*va, *vb, max_relative = 1e-12, epsilon = 1e-300);
        }
    }

    #[test]
    fn independent_noises_have_small_cross_ratio() {
        // At the covariance level (the squared fluctuation functions) the
        // cross term of independent noises is a small fraction of the
        // variance geometric mean.
        let x = series(white_noise(1 << 16, 31));
        let y = series(white_noise(1 << 16, 32));
        let q = QGrid::new(vec![2.0]).unwrap();
        let scales = crate::fitting::log_scale_grid(32, 256, 8).unwrap();
        let (xx, yy, xy) = cross_surfaces_raw(&x, &y, q.values(), &scales, 2).unwrap();
        for si in 0..scales.len() {
            let ratio = xy.value(0, si).powi(2) / (xx.value(0, si) * yy.value(0, si));
            assert!(ratio < 0.1, "ratio {ratio} at s={}", scales.scales()[si]);
        }
    }

    // Independent oracle: a direct DFA implementation with plain normal
    // equations, no shared code with the engine above.
    fn plain_dfa_f2(x: &[f64], s: usize, m: usize) -> f64 {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let mut prof = Vec::with_capacity(x.len());
        let mut acc = 0.0;
        for &v in x {
            acc += v - mean;
            prof.push(acc);
        }
        let t = prof.len();
        let ms = t / s;
        let mut segs: Vec<&[f64]> = Vec::new();
        for v in 0..ms {
            segs.push(&prof[v * s..(v + 1) * s]);
        }
        for v in 0..ms {
            let end = t - v * s;
            segs.push(&prof[end - s..end]);
        }
        let mut total = 0.0;
        for seg in &segs {
            // Normal equations for a degree-m polynomial on 0..s.
            let dim = m + 1;
            let mut a = vec![vec![0.0; dim]; dim];
            let mut b = vec![0.0; dim];
            for (i, &yv) in seg.iter().enumerate() {
                let xi = i as f64;
                let mut pows = vec![1.0; 2 * m + 1];
                for k in 1..=2 * m {
                    pows[k] = pows[k - 1] * xi;
                }
                for r in 0..dim {
                    for c in 0..dim {
                        a[r][c] += pows[r + c];
                    }
                    b[r] += pows[r] * yv;
                }
            }
            // Gaussian elimination.
            for col in 0..dim {
                let piv = (col..dim)
                    .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                    .unwrap();
                a.swap(col, piv);
                b.swap(col, piv);
                for r in col + 1..dim {
                    let f = a[r][col] / a[col][col];
                    for c in col..dim {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
            let mut coef = vec![0.0; dim];
            for r in (0..dim).rev() {
                let mut v = b[r];
                for c in r + 1..dim {
                    v -= a[r][c] * coef[c];
                }
                coef[r] = v / a[r][r];
            }
            let mut var = 0.0;
            for (i, &yv) in seg.iter().enumerate() {
                let xi = i as f64;
                let mut fit = 0.0;
                for (k, &ck) in coef.iter().enumerate() {
                    fit += ck * xi.powi(k as i32);
                }
                var += (yv - fit) * (yv - fit);
            }
            total += var / s as f64;
        }
        (total / segs.len() as f64).sqrt()
    }

    #[test]
    fn fzz_q2_matches_plain_dfa() {
        let q = QGrid::new(vec![2.0]).unwrap();
        let scales = crate::fitting::log_scale_grid(16, 512, 8).unwrap();
        for seed in [101u64, 102, 103] {
            let vals = white_noise(4096, seed);
            let x = series(vals.clone());
            let surf = fluctuation_zz(&x, &q, &scales, 2).unwrap();
            for (si, &s) in scales.scales().iter().enumerate() {
                let oracle = plain_dfa_f2(&vals, s, 2);
                assert_relative_eq!(surf.value(0, si), oracle, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn degenerate_constant_series_errors() {
        let x = series(vec![3.5; 256]);
        let q = QGrid::default_grid();
        let scales = ScaleGrid::new(vec![8, 16, 32]).unwrap();
        assert!(matches!(
            fluctuation_zz(&x, &q, &scales, 1),
            Err(Error::DegenerateScale { .. })
        ));
    }

    #[test]
    fn zero_runs_drop_segments_and_flag_scales() {
        // Half the series is a hard zero run: small scales lose many
        // segments and must be flagged.
        let mut vals = white_noise(512, 17);
        for v in vals.iter_mut().take(256) {
            *v = 0.0;
        }
        let x = series(vals);
        let q = QGrid::default_grid();
        let scales = ScaleGrid::new(vec![8, 16, 32]).unwrap();
        let surf = fluctuation_zz(&x, &q, &scales, 1).unwrap();
        assert!(surf.dropped[0] > 0);
        assert!(!surf.scale_usable(0));
        for v in &surf.values {
            assert!(v.is_finite() && *v > 0.0);
        }
    }

    #[test]
    fn qgrid_validation() {
        assert!(QGrid::new(vec![]).is_err());
        assert!(QGrid::new(vec![1.0, 1.0, 2.0]).is_err());
        assert!(QGrid::new(vec![0.0, 1.0, 3.0]).is_err()); // no q = 2
        let g = QGrid::default_grid();
        assert_eq!(g.len(), 41);
        assert!(g.index_of(2.0).is_some());
        assert!(g.index_of(0.0).is_some());
        assert_eq!(g.values()[0], -4.0);
        assert_eq!(*g.values().last().unwrap(), 4.0);
    }

    #[test]
    fn scalegrid_validation() {
        assert!(ScaleGrid::new(vec![]).is_err());
        assert!(ScaleGrid::new(vec![1, 4]).is_err());
        assert!(ScaleGrid::new(vec![4, 4]).is_err());
        assert!(ScaleGrid::new(vec![4, 8, 16]).is_ok());
    }
}
