//! Generalized Hurst exponents and singularity spectra from single-series
//! fluctuation surfaces.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::detrend::FluctuationSurface;
use crate::error::{Error, Result};
use crate::fitting;

/// h(q) with per-q regression standard errors. `min_r2` is the worst per-q
/// regression quality over the grid; poor scaling is reported through it
/// rather than refused.
#[derive(Debug, Clone, Serialize)]
pub struct HurstCurve {
    pub q: Vec<f64>,
    pub h: Vec<f64>,
    pub stderr: Vec<f64>,
    pub fit_range: (f64, f64),
    pub min_r2: f64,
}

impl HurstCurve {
    /// The standard Hurst exponent H = h(2), when 2 is on the grid.
    pub fn hurst(&self) -> Option<f64> {
        self.q
            .iter()
            .position(|&q| (q - 2.0).abs() < 1e-9)
            .map(|i| self.h[i])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "q,h,stderr")?;
        for i in 0..self.q.len() {
            writeln!(w, "{},{},{}", self.q[i], self.h[i], self.stderr[i])?;
        }
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), self)?;
        Ok(())
    }
}

/// Singularity spectrum (alpha, f(alpha)) emitted in q order, with the
/// derived width and apex asymmetry.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub alpha: Vec<f64>,
    pub f_alpha: Vec<f64>,
    pub width: f64,
    pub asymmetry: f64,
}

impl Spectrum {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "alpha,f")?;
        for (a, f) in self.alpha.iter().zip(&self.f_alpha) {
            writeln!(w, "{a},{f}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumMetrics {
    pub width: f64,
    pub asymmetry: f64,
}

/// Default fit range: the central half of the scale grid in log space.
pub fn central_fit_range(surface: &FluctuationSurface) -> (f64, f64) {
    let lo = (surface.scales.min() as f64).ln();
    let hi = (surface.scales.max() as f64).ln();
    let span = hi - lo;
    ((lo + 0.25 * span).exp(), (lo + 0.75 * span).exp())
}

/// Per-q slope of log F against log s over the fit range (defaulting to the
/// central half of the grid in log space), with the regression standard
/// error. Scales flagged unusable by the engine are skipped.
pub fn generalized_hurst(
    surface: &FluctuationSurface,
    fit_range: Option<(f64, f64)>,
) -> Result<HurstCurve> {
    if surface.signed {
        return Err(Error::WrongSurfaceKind {
            expected_signed: false,
        });
    }
    let range = fit_range.unwrap_or_else(|| central_fit_range(surface));
    let scales = surface.scales.scales();

    let mut h = Vec::with_capacity(surface.q_grid.len());
    let mut stderr = Vec::with_capacity(surface.q_grid.len());
    let mut min_r2 = 1.0f64;
    for qi in 0..surface.q_grid.len() {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (si, &s) in scales.iter().enumerate() {
            let sf = s as f64;
            if sf < range.0 || sf > range.1 || !surface.scale_usable(si) {
                continue;
            }
            let f = surface.value(qi, si);
            if !(f > 0.0) {
                return Err(Error::NonPositive("fluctuation value in fit range"));
            }
            xs.push(sf);
            ys.push(f);
        }
        if xs.len() < 5 {
            return Err(Error::TooFewPoints {
                needed: 5,
                got: xs.len(),
                context: "hurst fit range",
            });
        }
        let fit = fitting::loglog_fit(&xs, &ys, (range.0, range.1))?;
        h.push(fit.slope);
        stderr.push(fit.slope_stderr);
        min_r2 = min_r2.min(fit.r2);
    }

    Ok(HurstCurve {
        q: surface.q_grid.values().to_vec(),
        h,
        stderr,
        fit_range: range,
        min_r2,
    })
}

/// Legendre-type transform of h(q): `alpha = h + q dh/dq` and
/// `f(alpha) = q (alpha - h) + 1`, with dh/dq by central differences
/// (one-sided at the endpoints).
pub fn singularity_spectrum(curve: &HurstCurve) -> Result<Spectrum> {
    let n = curve.q.len();
    if n < 5 {
        return Err(Error::TooFewPoints {
            needed: 5,
            got: n,
            context: "singularity spectrum",
        });
    }
    let q = &curve.q;
    let h = &curve.h;
    let mut alpha = Vec::with_capacity(n);
    let mut f_alpha = Vec::with_capacity(n);
    for i in 0..n {
        let dh = if i == 0 {
            (h[1] - h[0]) / (q[1] - q[0])
        } else if i == n - 1 {
            (h[n - 1] - h[n - 2]) / (q[n - 1] - q[n - 2])
        } else {
            (h[i + 1] - h[i - 1]) / (q[i + 1] - q[i - 1])
        };
        if !dh.is_finite() {
            return Err(Error::NonFinite("dh/dq"));
        }
        let a = h[i] + q[i] * dh;
        alpha.push(a);
        f_alpha.push(q[i] * (a - h[i]) + 1.0);
    }
    let m = metrics(&alpha, &f_alpha);
    Ok(Spectrum {
        alpha,
        f_alpha,
        width: m.width,
        asymmetry: m.asymmetry,
    })
}

/// Spectrum width and apex asymmetry. Positive asymmetry means the left arm
/// (small alpha, large fluctuations) is the longer one.
pub fn spectrum_metrics(spec: &Spectrum) -> Result<SpectrumMetrics> {
    if spec.alpha.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: spec.alpha.len(),
            context: "spectrum metrics",
        });
    }
    Ok(metrics(&spec.alpha, &spec.f_alpha))
}

fn metrics(alpha: &[f64], f_alpha: &[f64]) -> SpectrumMetrics {
    let a_min = alpha.iter().cloned().fold(f64::INFINITY, f64::min);
    let a_max = alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = a_max - a_min;
    if width <= 1e-12 {
        return SpectrumMetrics {
            width,
            asymmetry: 0.0,
        };
    }
    let apex_idx = f_alpha
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let apex = alpha[apex_idx];
    let left = apex - a_min;
    let right = a_max - apex;
    SpectrumMetrics {
        width,
        asymmetry: (left - right) / (left + right),
    }
}
