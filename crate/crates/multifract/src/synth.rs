//! Deterministic benchmark generators with closed-form scaling oracles:
//! the binomial multiplicative cascade and fractional Gaussian noise.
//!
//! Both exist so that every estimator in the crate can be validated against
//! a known ground truth without external data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::series::{RegularSeries, SeriesKind};

/// Parameters of the binomial cascade: `levels` halving steps (series length
/// `2^levels`) and a multiplier `p` in (0.5, 1).
#[derive(Debug, Clone, Copy)]
pub struct CascadeParams {
    pub levels: u32,
    pub p: f64,
}

impl CascadeParams {
    pub fn new(levels: u32, p: f64) -> Result<Self> {
        // Lengths beyond 2^24 are a memory hazard; below 2^8 the measure is
        // too short for any scaling analysis, but tiny sizes are still
        // useful for direct value checks.
        if levels < 1 || levels > 24 {
            return Err(Error::InvalidArgument(format!(
                "cascade levels {levels} outside 1..=24"
            )));
        }
        if !(p > 0.5 && p < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "cascade p {p} outside (0.5, 1)"
            )));
        }
        Ok(CascadeParams { levels, p })
    }
}

/// Deterministic binomial multiplicative measure of length `2^levels`:
/// the value at index k is `p^(levels - b(k)) * (1-p)^b(k)` with `b(k)` the
/// number of set bits of k, so the values sum to one.
pub fn binomial_cascade(params: &CascadeParams) -> RegularSeries {
    let n = params.levels;
    let len = 1usize << n;
    let q = 1.0 - params.p;
    let mut pow_p = vec![1.0; n as usize + 1];
    let mut pow_q = vec![1.0; n as usize + 1];
    for j in 1..=n as usize {
        pow_p[j] = pow_p[j - 1] * params.p;
        pow_q[j] = pow_q[j - 1] * q;
    }
    let values: Vec<f64> = (0..len)
        .map(|k| {
            let b = (k as u64).count_ones() as usize;
            pow_p[n as usize - b] * pow_q[b]
        })
        .collect();
    RegularSeries::new(0, 1, SeriesKind::Volume, values)
        .expect("cascade values are valid by construction")
}

/// Closed-form generalized Hurst exponent of the binomial cascade:
/// `h(q) = 1/q - log2(p^q + (1-p)^q) / q`, with the q = 0 limit handled by
/// a series expansion. Strictly decreasing in q and continuous at q = 0.
pub fn analytic_cascade_hq(p: f64, q: f64) -> f64 {
    assert!(p > 0.5 && p < 1.0, "cascade p must lie in (0.5, 1)");
    let a = p.ln();
    let b = (1.0 - p).ln();
    // Rewriting p^q + (1-p)^q = 2 exp(q(a+b)/2) cosh(q(a-b)/2) cancels the
    // 1/q terms analytically, leaving a form stable for q -> 0.
    let c0 = -(a + b) / (2.0 * std::f64::consts::LN_2);
    let d = a - b;
    let x = q * d / 2.0;
    let lncosh_over_q = if x.abs() < 1e-4 {
        q * d * d / 8.0 * (1.0 - x * x / 6.0)
    } else {
        ln_cosh(x) / q
    };
    c0 - lncosh_over_q / std::f64::consts::LN_2
}

/// Closed-form singularity strength of the cascade at moment order q,
/// `alpha(q) = d/dq [q h(q)]`.
pub fn analytic_cascade_alpha(p: f64, q: f64) -> f64 {
    assert!(p > 0.5 && p < 1.0, "cascade p must lie in (0.5, 1)");
    let a = p.ln();
    let b = (1.0 - p).ln();
    let c0 = -(a + b) / (2.0 * std::f64::consts::LN_2);
    let d = a - b;
    c0 - d / 2.0 * (q * d / 2.0).tanh() / std::f64::consts::LN_2
}

fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

/// Fractional Gaussian noise with Hurst parameter `h`, generated by
/// circulant embedding of the exact autocovariance (unit variance,
/// deterministic per seed). `length` must be a power of two, at least 2^10.
///
/// If the first circulant embedding has negative eigenvalues the size is
/// doubled once before giving up.
pub fn fgn(h: f64, length: usize, seed: u64) -> Result<RegularSeries> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidArgument(format!("hurst {h} outside (0, 1)")));
    }
    if length < (1 << 10) || !length.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "fgn length {length} must be a power of two >= 1024"
        )));
    }

    let mut embed = 2 * length;
    for attempt in 0..2 {
        match try_fgn(h, length, embed, seed) {
            Some(values) => {
                return RegularSeries::new(0, 1, SeriesKind::LogReturn, values);
            }
            None if attempt == 0 => embed *= 2,
            None => break,
        }
    }
    Err(Error::EmbeddingFailed { hurst: h })
}

fn fgn_autocov(h: f64, k: usize) -> f64 {
    let k = k as f64;
    let e = 2.0 * h;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

fn try_fgn(h: f64, length: usize, m: usize, seed: u64) -> Option<Vec<f64>> {
    // Circulant first row: autocovariance out to m/2 and mirrored back.
    let half = m / 2;
    let mut c: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let k = if j <= half { j } else { m - j };
            Complex::new(fgn_autocov(h, k), 0.0)
        })
        .collect();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut c);

    let eigen: Vec<f64> = c.iter().map(|z| z.re).collect();
    let max = eigen.iter().cloned().fold(0.0, f64::max);
    if eigen.iter().any(|&l| l < -1e-8 * max) {
        return None;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mf = m as f64;
    let mut spec = vec![Complex::new(0.0, 0.0); m];
    let g0: f64 = StandardNormal.sample(&mut rng);
    spec[0] = Complex::new((eigen[0].max(0.0) / mf).sqrt() * g0, 0.0);
    for k in 1..half {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        let amp = (eigen[k].max(0.0) / (2.0 * mf)).sqrt();
        spec[k] = Complex::new(amp * a, amp * b);
        spec[m - k] = spec[k].conj();
    }
    let gn: f64 = StandardNormal.sample(&mut rng);
    spec[half] = Complex::new((eigen[half].max(0.0) / mf).sqrt() * gn, 0.0);

    fft.process(&mut spec);
    Some(spec.iter().take(length).map(|z| z.re).collect())
}
