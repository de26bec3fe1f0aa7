//! Least-squares helpers shared by the scaling estimators.

use serde::Serialize;

use crate::detrend::ScaleGrid;
use crate::error::{Error, Result};

/// Ordinary least-squares line fit with the classical slope standard error.
#[derive(Debug, Clone, Serialize)]
pub struct LinFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r2: f64,
    pub n: usize,
}

/// OLS fit of `y` against `x`. Requires at least 3 points.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: n,
            context: "linear fit",
        });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("regressor in linear fit"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // Residuals summed directly; the textbook syy - slope*sxy form cancels
    // catastrophically on near-exact data.
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - intercept - slope * xi;
            r * r
        })
        .sum();
    let slope_stderr = (ss_res / (nf - 2.0) / sxx).sqrt();
    // A response that is constant up to rounding is fit exactly by the
    // zero-slope line.
    let y_scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let r2 = if syy <= nf * (16.0 * f64::EPSILON * y_scale).powi(2) {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(LinFit {
        slope,
        intercept,
        slope_stderr,
        r2,
        n,
    })
}

/// OLS on (ln x, ln y) restricted to x in `[range.0, range.1]` (inclusive).
///
/// All selected points must be strictly positive in both coordinates and at
/// least 3 must fall inside the range.
pub fn loglog_fit(x: &[f64], y: &[f64], range: (f64, f64)) -> Result<LinFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let (lo, hi) = range;
    if !(lo <= hi) {
        return Err(Error::InvalidArgument(format!(
            "fit range [{lo}, {hi}] is empty"
        )));
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&xi, &yi) in x.iter().zip(y) {
        if xi < lo || xi > hi {
            continue;
        }
        if xi <= 0.0 || yi <= 0.0 {
            return Err(Error::NonPositive("log-log fit input"));
        }
        lx.push(xi.ln());
        ly.push(yi.ln());
    }
    if lx.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: lx.len(),
            context: "log-log fit",
        });
    }
    linear_fit(&lx, &ly)
}

/// Log-spaced integer scale grid: `round(exp(linspace(ln s_min, ln s_max, count)))`
/// with duplicates removed.
pub fn log_scale_grid(s_min: usize, s_max: usize, count: usize) -> Result<ScaleGrid> {
    if s_min < 4 {
        return Err(Error::InvalidGrid(format!("s_min {s_min} < 4")));
    }
    if s_max <= s_min {
        return Err(Error::InvalidGrid(format!("s_max {s_max} <= s_min {s_min}")));
    }
    if count < 2 {
        return Err(Error::InvalidGrid(format!("count {count} < 2")));
    }
    let lo = (s_min as f64).ln();
    let hi = (s_max as f64).ln();
    let step = (hi - lo) / (count - 1) as f64;
    let mut scales = Vec::with_capacity(count);
    for i in 0..count {
        let s = (lo + step * i as f64).exp().round() as usize;
        if scales.last() != Some(&s) {
            scales.push(s);
        }
    }
    ScaleGrid::new(scales)
}
