//! Cross-correlation scaling of a coupled volatility/volume-style pair:
//! the signed cross fluctuation family, lambda(q) against the averaged
//! Hurst benchmark, and the detrended correlation coefficient rho(q,s).
//!
//! Run with: cargo run --example volatility_volume_rho

use multifract::detrend::{fluctuation_xy, fluctuation_zz, QGrid};
use multifract::fitting::log_scale_grid;
use multifract::mfcca::{avg_hurst, lambda_exponent, rho};
use multifract::mfdfa::generalized_hurst;
use multifract::series::{RegularSeries, SeriesKind};
use multifract::synth::fgn;

fn main() -> anyhow::Result<()> {
    // A common persistent activity factor drives both series, with
    // independent noise on top: volatility ~ |activity + noise|,
    // volume ~ |activity + other noise|.
    let t = 1 << 16;
    let activity = fgn(0.8, t, 7)?;
    let na = fgn(0.5, t, 8)?;
    let nb = fgn(0.5, t, 9)?;
    let volatility = RegularSeries::new(
        0,
        1,
        SeriesKind::Volatility,
        activity
            .values
            .iter()
            .zip(&na.values)
            .map(|(a, n)| (a + 0.7 * n).abs())
            .collect(),
    )?;
    let volume = RegularSeries::new(
        0,
        1,
        SeriesKind::Volume,
        activity
            .values
            .iter()
            .zip(&nb.values)
            .map(|(a, n)| (a + 0.7 * n).abs())
            .collect(),
    )?;

    let q = QGrid::from_range(0.2, 4.0, 0.2)?;
    let scales = log_scale_grid(16, t / 4, 30)?;
    let fxx = fluctuation_zz(&volatility, &q, &scales, 2)?;
    let fyy = fluctuation_zz(&volume, &q, &scales, 2)?;
    let fxy = fluctuation_xy(&volatility, &volume, &q, &scales, 2)?;

    let hx = generalized_hurst(&fxx, None)?;
    let hy = generalized_hurst(&fyy, None)?;
    let havg = avg_hurst(&hx, &hy)?;
    let lambda = lambda_exponent(&fxy, None)?;

    println!("    q    lambda(q)   h_avg(q)   difference");
    for (i, &qv) in lambda.q.iter().enumerate() {
        if (qv * 5.0).round() as i64 % 5 != 0 {
            continue;
        }
        let j = havg
            .q
            .iter()
            .position(|&v| (v - qv).abs() < 1e-9)
            .expect("same grid");
        println!(
            "  {qv:4.1}    {:.4}     {:.4}    {:+.4}",
            lambda.lambda[i],
            havg.h[j],
            lambda.lambda[i] - havg.h[j]
        );
    }
    if !lambda.excluded.is_empty() {
        println!("  (excluded for mixed signs: {:?})", lambda.excluded);
    }

    let r = rho(&volatility, &volume, 2.0, &scales, 2)?;
    println!("\n    s      rho(2,s)");
    for (s, v) in r.scales.iter().zip(&r.rho).step_by(5) {
        println!("  {s:6}   {v:.4}");
    }
    Ok(())
}
