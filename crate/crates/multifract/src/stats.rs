//! Classical diagnostics: autocorrelation, complementary cumulative
//! distributions, tail-exponent and stretched-exponential fits, and the
//! Pearson coefficient.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitting;
use crate::series::RegularSeries;

/// Empirical exceedance curve P(X > x) over the distinct sample values.
///
/// Ties collapse to the largest rank and the probabilities are strictly
/// decreasing in (0, 1); the sample maximum (exceedance zero) is omitted.
/// The first probability is (n-1)/n when the minimum is unique. For the
/// degenerate all-equal sample the curve is the single point (x, 0),
/// recording the jump of P(X > x) from 1 to 0 at x.
#[derive(Debug, Clone, Serialize)]
pub struct CcdfCurve {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl CcdfCurve {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The sub-curve with strictly positive x (and positive probability),
    /// as required by the tail-fit models.
    pub fn restrict_positive(&self) -> CcdfCurve {
        let mut x = Vec::new();
        let mut p = Vec::new();
        for (&xi, &pi) in self.x.iter().zip(&self.p) {
            if xi > 0.0 && pi > 0.0 {
                x.push(xi);
                p.push(pi);
            }
        }
        CcdfCurve { x, p }
    }

    /// x value at the given sample quantile (0..1) of the curve support.
    pub fn quantile_x(&self, quantile: f64) -> f64 {
        let idx = ((self.x.len() as f64 - 1.0) * quantile).round() as usize;
        self.x[idx.min(self.x.len() - 1)]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "x,p")?;
        for (x, p) in self.x.iter().zip(&self.p) {
            writeln!(w, "{x},{p}")?;
        }
        Ok(())
    }
}

/// Power-law tail fit P(X > x) ~ x^(-gamma) over x >= x_min.
#[derive(Debug, Clone, Serialize)]
pub struct TailFit {
    pub gamma: f64,
    pub stderr: f64,
    pub x_min: f64,
    pub n_tail: usize,
}

/// Stretched-exponential fit ln P(X > x) = -(x/x0)^beta + c.
#[derive(Debug, Clone, Serialize)]
pub struct StretchedFit {
    pub beta: f64,
    pub x0: f64,
    pub residual: f64,
}

/// Autocorrelation A(lag) for lag 0..=max_lag, using the full-sample mean and
/// variance so that A(0) = 1 exactly.
pub fn acf(series: &RegularSeries, max_lag: usize) -> Result<Vec<f64>> {
    let x = &series.values;
    let t = x.len();
    if max_lag < 1 || max_lag >= t {
        return Err(Error::InvalidArgument(format!(
            "max_lag {max_lag} outside 1..{t}"
        )));
    }
    let mean = x.iter().sum::<f64>() / t as f64;
    let denom: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    if !(denom > 0.0) {
        return Err(Error::ZeroVariance("acf input"));
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for lag in 1..=max_lag {
        let num: f64 = (0..t - lag)
            .map(|i| (x[i] - mean) * (x[i + lag] - mean))
            .sum();
        out.push(num / denom);
    }
    Ok(out)
}

pub fn write_acf_csv(acf: &[f64], path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "lag,acf")?;
    for (lag, a) in acf.iter().enumerate() {
        writeln!(w, "{lag},{a}")?;
    }
    Ok(())
}

/// Empirical complementary cumulative distribution of the sample.
pub fn ccdf(values: &[f64]) -> Result<CcdfCurve> {
    if values.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: values.len(),
            context: "ccdf",
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ccdf input"));
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut x = Vec::new();
    let mut p = Vec::new();
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == v {
            j += 1;
        }
        let exceed = n - 1 - j;
        if exceed > 0 {
            x.push(v);
            p.push(exceed as f64 / n as f64);
        }
        i = j + 1;
    }
    if x.is_empty() {
        // All values equal: record the jump point itself.
        x.push(sorted[0]);
        p.push(0.0);
    }
    Ok(CcdfCurve { x, p })
}

/// Least-squares regression of log P against log x over curve points with
/// x >= x_min; the tail exponent is the negated slope.
pub fn fit_powerlaw_tail(curve: &CcdfCurve, x_min: f64) -> Result<TailFit> {
    let mut xs = Vec::new();
    let mut ps = Vec::new();
    for (&x, &p) in curve.x.iter().zip(&curve.p) {
        if x >= x_min {
            if x <= 0.0 || p <= 0.0 {
                return Err(Error::NonPositive("power-law tail point"));
            }
            xs.push(x);
            ps.push(p);
        }
    }
    if xs.len() < 10 {
        return Err(Error::TooFewPoints {
            needed: 10,
            got: xs.len(),
            context: "power-law tail fit",
        });
    }
    let fit = fitting::loglog_fit(&xs, &ps, (x_min, f64::INFINITY))?;
    if fit.slope >= 0.0 {
        return Err(Error::FitDiverged(format!(
            "tail slope {} is not negative",
            fit.slope
        )));
    }
    Ok(TailFit {
        gamma: -fit.slope,
        stderr: fit.slope_stderr,
        x_min,
        n_tail: xs.len(),
    })
}

/// Least-squares fit of `ln P = -(x/x0)^beta + c` over the whole curve.
///
/// For fixed beta the model is linear in (-x0^-beta, c), so beta is found by
/// a coarse scan plus golden-section refinement of the profiled residual.
pub fn fit_stretched_exp(curve: &CcdfCurve) -> Result<StretchedFit> {
    if curve.len() < 20 {
        return Err(Error::TooFewPoints {
            needed: 20,
            got: curve.len(),
            context: "stretched-exponential fit",
        });
    }
    if curve.x.iter().any(|&x| x <= 0.0) || curve.p.iter().any(|&p| p <= 0.0) {
        return Err(Error::NonPositive("stretched-exponential input"));
    }
    let lnp: Vec<f64> = curve.p.iter().map(|p| p.ln()).collect();

    // SSE of the best linear model ln p = a x^beta + c for this beta.
    let sse = |beta: f64| -> (f64, f64, f64) {
        let u: Vec<f64> = curve.x.iter().map(|x| x.powf(beta)).collect();
        let n = u.len() as f64;
        let mu = u.iter().sum::<f64>() / n;
        let mp = lnp.iter().sum::<f64>() / n;
        let mut suu = 0.0;
        let mut sup = 0.0;
        let mut spp = 0.0;
        for (&ui, &pi) in u.iter().zip(&lnp) {
            suu += (ui - mu) * (ui - mu);
            sup += (ui - mu) * (pi - mp);
            spp += (pi - mp) * (pi - mp);
        }
        if suu == 0.0 {
            return (f64::INFINITY, 0.0, 0.0);
        }
        let a = sup / suu;
        let c = mp - a * mu;
        ((spp - a * sup).max(0.0), a, c)
    };

    const BETA_LO: f64 = 0.02;
    const BETA_HI: f64 = 2.0;
    let mut best = (f64::INFINITY, BETA_LO);
    let mut beta = BETA_LO;
    while beta <= BETA_HI + 1e-12 {
        let (e, _, _) = sse(beta);
        if e < best.0 {
            best = (e, beta);
        }
        beta += 0.02;
    }
    let mut lo = (best.1 - 0.02).max(BETA_LO);
    let mut hi = (best.1 + 0.02).min(BETA_HI);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if sse(m1).0 <= sse(m2).0 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let beta = 0.5 * (lo + hi);
    let (err, a, _c) = sse(beta);
    if !(a < 0.0) {
        return Err(Error::FitDiverged(
            "stretched-exponential slope is non-negative".into(),
        ));
    }
    if beta <= BETA_LO + 1e-9 || beta >= BETA_HI - 1e-9 {
        return Err(Error::FitDiverged(format!(
            "beta pinned at search boundary ({beta:.3})"
        )));
    }
    Ok(StretchedFit {
        beta,
        x0: (-a).powf(-1.0 / beta),
        residual: (err / curve.len() as f64).sqrt(),
    })
}

/// Product-moment correlation coefficient of two equally long series.
pub fn pearson(x: &RegularSeries, y: &RegularSeries) -> Result<f64> {
    if x.values.len() != y.values.len() {
        return Err(Error::LengthMismatch {
            left: x.values.len(),
            right: y.values.len(),
        });
    }
    let n = x.values.len() as f64;
    let mx = x.values.iter().sum::<f64>() / n;
    let my = y.values.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.values.iter().zip(&y.values) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::ZeroVariance("pearson input"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Hill maximum-likelihood tail-index estimate from the k largest sample
/// values, as a cross-check on the regression-based exponent.
pub fn hill_estimator(values: &[f64], k: usize) -> Result<TailFit> {
    if k < 10 || k + 1 > values.len() {
        return Err(Error::TooFewPoints {
            needed: 10,
            got: k,
            context: "hill estimator",
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let x_k1 = sorted[k];
    if x_k1 <= 0.0 {
        return Err(Error::NonPositive("hill order statistic"));
    }
    let mean_log: f64 = sorted[..k].iter().map(|&v| (v / x_k1).ln()).sum::<f64>() / k as f64;
    if !(mean_log > 0.0) {
        return Err(Error::FitDiverged("hill estimator: flat tail".into()));
    }
    let gamma = 1.0 / mean_log;
    Ok(TailFit {
        gamma,
        stderr: gamma / (k as f64).sqrt(),
        x_min: x_k1,
        n_tail: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::SeriesKind;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(values: Vec<f64>) -> RegularSeries {
        RegularSeries::new(0, 1, SeriesKind::LogReturn, values).unwrap()
    }

    fn uniform(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
    }

    #[test]
    fn acf_alternating_is_minus_one_at_lag_one() {
        let vals: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a = acf(&series(vals), 3).unwrap();
        assert_eq!(a[0], 1.0);
        assert!((a[1] + 1.0).abs() < 2.0 / 1000.0, "A(1) = {}", a[1]);
    }

    #[test]
    fn acf_white_noise_within_band() {
        let t = 100_000;
        let vals = uniform(t, 42);
        let a = acf(&series(vals), 50).unwrap();
        let band = 3.0 / (t as f64).sqrt();
        for (lag, &v) in a.iter().enumerate().skip(1) {
            assert!(v.abs() < band, "lag {lag}: {v} outside +-{band}");
        }
    }

    #[test]
    fn acf_affine_invariant() {
        let vals = uniform(512, 7);
        let scaled: Vec<f64> = vals.iter().map(|v| 3.0 * v + 11.0).collect();
        let a = acf(&series(vals), 20).unwrap();
        let b = acf(&series(scaled), 20).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn acf_rejects_bad_args() {
        let s = series(vec![1.0, 2.0, 3.0]);
        assert!(acf(&s, 0).is_err());
        assert!(acf(&s, 3).is_err());
        assert!(acf(&series(vec![5.0; 10]), 2).is_err());
    }

    #[test]
    fn ccdf_rank_counting() {
        let c = ccdf(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(c.x, vec![1.0, 2.0, 3.0]);
        assert_eq!(c.p, vec![0.75, 0.5, 0.25]);
    }

    #[test]
    fn ccdf_first_probability_with_unique_min() {
        let c = ccdf(&[5.0, 1.0, 9.0, 3.0, 7.0]).unwrap();
        assert_relative_eq!(c.p[0], 4.0 / 5.0);
        assert!(c.p.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn ccdf_ties_collapse_to_largest_rank() {
        let c = ccdf(&[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(c.x, vec![1.0, 2.0]);
        assert_eq!(c.p, vec![0.75, 0.25]);
    }

    #[test]
    fn ccdf_degenerate_all_equal() {
        let c = ccdf(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(c.x, vec![2.0]);
        assert_eq!(c.p, vec![0.0]);
    }

    fn pareto_sample(gamma: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random_range(0.0f64..1.0);
                (1.0 - u).powf(-1.0 / gamma)
            })
            .collect()
    }

    #[test]
    fn ccdf_pareto_slope_matches_generator() {
        let sample = pareto_sample(3.0, 100_000, 1);
        let c = ccdf(&sample).unwrap();
        let x_min = c.quantile_x(0.95);
        let fit = fit_powerlaw_tail(&c, x_min).unwrap();
        assert!(
            (fit.gamma - 3.0).abs() < 0.15,
            "gamma {} +- {}",
            fit.gamma,
            fit.stderr
        );
    }

    #[test]
    fn powerlaw_exact_curve() {
        let x: Vec<f64> = (0..50).map(|i| 10f64.powf(i as f64 * 0.04)).collect();
        let p: Vec<f64> = x.iter().map(|&v| v.powf(-3.0)).collect();
        let curve = CcdfCurve { x, p };
        let fit = fit_powerlaw_tail(&curve, 1.0).unwrap();
        assert_relative_eq!(fit.gamma, 3.0, epsilon = 1e-10);
        assert!(fit.stderr < 1e-10);
    }

    #[test]
    fn powerlaw_needs_ten_tail_points() {
        let x: Vec<f64> = (1..=9).map(|i| i as f64).collect();
        let p: Vec<f64> = x.iter().map(|&v| v.powf(-2.0)).collect();
        let curve = CcdfCurve { x, p };
        assert!(matches!(
            fit_powerlaw_tail(&curve, 0.5),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn stretched_exact_curve_recovers_beta() {
        let x: Vec<f64> = (1..=60).map(|i| i as f64 * 0.25).collect();
        let p: Vec<f64> = x.iter().map(|&v| (-v.powf(0.5)).exp()).collect();
        let fit = fit_stretched_exp(&CcdfCurve { x, p }).unwrap();
        assert!((fit.beta - 0.5).abs() < 0.02, "beta {}", fit.beta);
        assert_relative_eq!(fit.x0, 1.0, epsilon = 1e-3);
        assert!(fit.residual < 1e-6);
    }

    #[test]
    fn stretched_weibull_draws_recover_unit_beta() {
        // Exponential tail: X = -ln U has P(X > x) = exp(-x).
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sample: Vec<f64> = (0..100_000)
            .map(|_| -rng.random_range(0.0f64..1.0f64).max(1e-300).ln())
            .collect();
        let curve = ccdf(&sample).unwrap().restrict_positive();
        let fit = fit_stretched_exp(&curve).unwrap();
        assert!((fit.beta - 1.0).abs() < 0.05, "beta {}", fit.beta);
    }

    #[test]
    fn stretched_rejects_rising_curve() {
        let x: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let p: Vec<f64> = x.iter().map(|&v| (v / 100.0).min(0.99)).collect();
        assert!(matches!(
            fit_stretched_exp(&CcdfCurve { x, p }),
            Err(Error::FitDiverged(_))
        ));
    }

    #[test]
    fn pearson_self_and_negation() {
        let x = series(uniform(1000, 3));
        let neg = series(x.values.iter().map(|v| -v).collect());
        assert_relative_eq!(pearson(&x, &x).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(pearson(&x, &neg).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn pearson_independent_noise_small() {
        let x = series(uniform(100_000, 4));
        let y = series(uniform(100_000, 5));
        assert!(pearson(&x, &y).unwrap().abs() < 0.01);
    }

    #[test]
    fn pearson_rejects_mismatch_and_constant() {
        let x = series(vec![1.0, 2.0, 3.0]);
        let y = series(vec![1.0, 2.0]);
        assert!(pearson(&x, &y).is_err());
        let z = series(vec![1.0, 1.0, 1.0]);
        assert!(pearson(&x, &z).is_err());
    }

    #[test]
    fn hill_close_to_regression_on_pareto() {
        let sample = pareto_sample(3.0, 100_000, 9);
        let fit = hill_estimator(&sample, 5000).unwrap();
        assert!((fit.gamma - 3.0).abs() < 0.15, "hill gamma {}", fit.gamma);
    }
}
