//! Surrogate testing of multifractality: shuffling destroys all
//! correlations, Fourier phase randomization keeps only the linear ones.
//! Both collapse the spectrum of a long-range correlated Gaussian signal;
//! for the heavy-tailed cascade the shuffled spectrum stays wide because
//! its width is carried by the value distribution, not only by ordering.
//!
//! Run with: cargo run --example surrogate_significance

use multifract::detrend::{fluctuation_zz, QGrid};
use multifract::fitting::log_scale_grid;
use multifract::mfdfa::{generalized_hurst, singularity_spectrum};
use multifract::series::RegularSeries;
use multifract::surrogates::{surrogate, SurrogateKind, SurrogateSpec};
use multifract::synth::{binomial_cascade, fgn, CascadeParams};

fn width_and_h2(series: &RegularSeries) -> anyhow::Result<(f64, f64)> {
    let q = QGrid::default_grid();
    let scales = log_scale_grid(16, series.len() / 4, 40)?;
    let surface = fluctuation_zz(series, &q, &scales, 2)?;
    let h = generalized_hurst(&surface, None)?;
    let spectrum = singularity_spectrum(&h)?;
    Ok((spectrum.width, h.hurst().expect("q = 2 on grid")))
}

fn report(label: &str, series: &RegularSeries, seed: u64) -> anyhow::Result<()> {
    let (w0, h0) = width_and_h2(series)?;
    println!("{label}");
    println!("  original:  width {w0:.3}  h(2) {h0:.3}");
    for kind in [SurrogateKind::Shuffle, SurrogateKind::Fourier] {
        let spec = SurrogateSpec::new(kind, seed, 0);
        let s = surrogate(series, &spec)?;
        let (w, h2) = width_and_h2(&s)?;
        println!("  {kind:?}:   width {w:.3}  h(2) {h2:.3}");
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let noise = fgn(0.7, 1 << 16, 42)?;
    report("fractional Gaussian noise, H = 0.7, T = 2^16", &noise, 1)?;
    println!();
    let cascade = binomial_cascade(&CascadeParams::new(16, 0.75)?);
    report("binomial cascade, p = 0.75, T = 2^16", &cascade, 2)?;
    Ok(())
}
