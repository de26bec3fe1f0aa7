//! Significance-test surrogates.
//!
//! Shuffling destroys both linear and nonlinear correlations while keeping
//! the value distribution; Fourier phase randomization keeps the power
//! spectrum (linear correlations) and destroys everything else. Both are
//! deterministic given a [`SurrogateSpec`]: the generator is seeded with
//! `seed + replicate_index` (wrapping), so batches of replicates can run in
//! parallel with independent streams.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::RegularSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    Shuffle,
    Fourier,
}

impl std::str::FromStr for SurrogateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shuffle" => Ok(SurrogateKind::Shuffle),
            "fourier" => Ok(SurrogateKind::Fourier),
            other => Err(Error::InvalidArgument(format!(
                "unknown surrogate kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub kind: SurrogateKind,
    pub seed: u64,
    pub replicate_index: u64,
}

impl SurrogateSpec {
    pub fn new(kind: SurrogateKind, seed: u64, replicate_index: u64) -> Self {
        SurrogateSpec {
            kind,
            seed,
            replicate_index,
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(self.replicate_index))
    }
}

/// Generate the surrogate described by `spec.kind`.
pub fn surrogate(series: &RegularSeries, spec: &SurrogateSpec) -> Result<RegularSeries> {
    match spec.kind {
        SurrogateKind::Shuffle => shuffle_surrogate(series, spec),
        SurrogateKind::Fourier => fourier_surrogate(series, spec),
    }
}

/// Uniform random permutation of the values (Fisher-Yates); the multiset of
/// values is preserved exactly.
pub fn shuffle_surrogate(series: &RegularSeries, spec: &SurrogateSpec) -> Result<RegularSeries> {
    if series.values.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: series.values.len(),
            context: "shuffle surrogate",
        });
    }
    let mut rng = spec.rng();
    let mut out = series.clone();
    out.values.shuffle(&mut rng);
    out.surrogate = Some(SurrogateSpec {
        kind: SurrogateKind::Shuffle,
        ..*spec
    });
    Ok(out)
}

/// Phase-randomized surrogate: the discrete Fourier amplitudes are kept, the
/// phases of all non-self-conjugate bins are replaced by i.i.d. uniform
/// angles with conjugate symmetry enforced, and the zero-frequency (and, for
/// even lengths, Nyquist) bins stay untouched. The amplitude spectrum and
/// sample mean are preserved up to rounding; the value distribution drifts
/// toward Gaussian, which is expected for plain (non-amplitude-adjusted)
/// phase randomization.
pub fn fourier_surrogate(series: &RegularSeries, spec: &SurrogateSpec) -> Result<RegularSeries> {
    let n = series.values.len();
    if n < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: n,
            context: "fourier surrogate",
        });
    }
    let mut rng = spec.rng();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut buf: Vec<Complex<f64>> = series
        .values
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    fwd.process(&mut buf);

    let half = if n % 2 == 0 { n / 2 } else { n.div_ceil(2) };
    for k in 1..half {
        let amp = buf[k].norm();
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let z = Complex::from_polar(amp, theta);
        buf[k] = z;
        buf[n - k] = z.conj();
    }

    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    let mut out = series.clone();
    out.values = buf.iter().map(|c| c.re * scale).collect();
    out.surrogate = Some(SurrogateSpec {
        kind: SurrogateKind::Fourier,
        ..*spec
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::SeriesKind;
    use approx::assert_relative_eq;

    fn noise_series(n: usize, seed: u64) -> RegularSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        RegularSeries::new(0, 1, SeriesKind::LogReturn, values).unwrap()
    }

    fn power_spectrum(values: &[f64]) -> Vec<f64> {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(values.len());
        let mut buf: Vec<Complex<f64>> =
            values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft.process(&mut buf);
        buf.iter().map(|c| c.norm_sqr()).collect()
    }

    #[test]
    fn shuffle_preserves_multiset() {
        let s = noise_series(257, 1);
        let spec = SurrogateSpec::new(SurrogateKind::Shuffle, 7, 0);
        let out = shuffle_surrogate(&s, &spec).unwrap();
        let mut a = s.values.clone();
        let mut b = out.values.clone();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
        assert_ne!(s.values, out.values);
    }

    #[test]
    fn shuffle_deterministic_per_seed_and_replicate() {
        let s = noise_series(128, 2);
        let spec = SurrogateSpec::new(SurrogateKind::Shuffle, 42, 0);
        let a = shuffle_surrogate(&s, &spec).unwrap();
        let b = shuffle_surrogate(&s, &spec).unwrap();
        assert_eq!(a.values, b.values);
        let spec2 = SurrogateSpec::new(SurrogateKind::Shuffle, 42, 1);
        let c = shuffle_surrogate(&s, &spec2).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn fourier_preserves_power_spectrum_and_mean() {
        for n in [256usize, 255] {
            let s = noise_series(n, 3);
            let spec = SurrogateSpec::new(SurrogateKind::Fourier, 5, 0);
            let out = fourier_surrogate(&s, &spec).unwrap();

            let pa = power_spectrum(&s.values);
            let pb = power_spectrum(&out.values);
            let scale = pa.iter().cloned().fold(0.0, f64::max);
            for (a, b) in pa.iter().zip(&pb) {
                assert!((a - b).abs() <= 1e-9 * scale, "spectrum drift: {a} vs {b}");
            }

            let ma = s.values.iter().sum::<f64>() / n as f64;
            let mb = out.values.iter().sum::<f64>() / n as f64;
            assert_relative_eq!(ma, mb, epsilon = 1e-9);
        }
    }

    #[test]
    fn fourier_deterministic_and_replicate_dependent() {
        let s = noise_series(64, 4);
        let a = fourier_surrogate(&s, &SurrogateSpec::new(SurrogateKind::Fourier, 9, 0)).unwrap();
        let b = fourier_surrogate(&s, &SurrogateSpec::new(SurrogateKind::Fourier, 9, 0)).unwrap();
        let c = fourier_surrogate(&s, &SurrogateSpec::new(SurrogateKind::Fourier, 9, 3)).unwrap();
        assert_eq!(a.values, b.values);
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn surrogate_metadata_recorded() {
        let s = noise_series(32, 5);
        let spec = SurrogateSpec::new(SurrogateKind::Shuffle, 11, 2);
        let out = surrogate(&s, &spec).unwrap();
        assert_eq!(out.surrogate, Some(spec));
        assert_eq!(out.kind, s.kind);
        assert_eq!(out.dt_ms, s.dt_ms);
    }

    #[test]
    fn rejects_too_short_input() {
        let s = RegularSeries::new(0, 1, SeriesKind::LogReturn, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(fourier_surrogate(&s, &SurrogateSpec::new(SurrogateKind::Fourier, 0, 0)).is_err());
    }
}
