//! Hurst exponent recovery on fractional Gaussian noise: the generator
//! parameter is the ground truth for h(2).
//!
//! Run with: cargo run --example fgn_hurst

use multifract::detrend::{fluctuation_zz, QGrid};
use multifract::fitting::log_scale_grid;
use multifract::mfdfa::generalized_hurst;
use multifract::synth::fgn;

fn main() -> anyhow::Result<()> {
    let q = QGrid::new(vec![2.0])?;
    println!("fractional Gaussian noise, T = 2^16, 5 seeds per H\n");
    println!("    H     mean h(2)   spread");
    for hurst in [0.3, 0.5, 0.7] {
        let mut estimates = Vec::new();
        for seed in 0..5u64 {
            let x = fgn(hurst, 1 << 16, seed)?;
            let scales = log_scale_grid(16, x.len() / 4, 40)?;
            let surface = fluctuation_zz(&x, &q, &scales, 2)?;
            let h = generalized_hurst(&surface, None)?;
            estimates.push(h.hurst().expect("q = 2 on grid"));
        }
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        let min = estimates.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("  {hurst:.1}    {mean:.4}      [{min:.4}, {max:.4}]");
    }
    Ok(())
}
