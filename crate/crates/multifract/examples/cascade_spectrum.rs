//! MFDFA on the deterministic binomial cascade, checked against the
//! closed-form generalized Hurst exponent.
//!
//! Run with: cargo run --example cascade_spectrum

use multifract::detrend::{fluctuation_zz, QGrid, ScaleGrid};
use multifract::mfdfa::{generalized_hurst, singularity_spectrum};
use multifract::synth::{analytic_cascade_hq, binomial_cascade, CascadeParams};

fn main() -> anyhow::Result<()> {
    let params = CascadeParams::new(16, 0.75)?;
    let cascade = binomial_cascade(&params);
    println!(
        "binomial cascade: 2^{} = {} points, p = {}",
        params.levels,
        cascade.len(),
        params.p
    );

    // Dyadic scales suit the dyadic construction of the measure.
    let scales = ScaleGrid::new((0..11).map(|i| 16usize << i).collect())?;
    let q = QGrid::default_grid();
    let surface = fluctuation_zz(&cascade, &q, &scales, 2)?;
    let h = generalized_hurst(&surface, Some((16.0, 16384.0)))?;

    println!("\n    q     h(q)    analytic   error");
    for (i, &qv) in h.q.iter().enumerate() {
        if (qv - qv.round()).abs() > 1e-9 {
            continue;
        }
        let exact = analytic_cascade_hq(params.p, qv);
        println!(
            "  {qv:+.1}   {:.4}    {exact:.4}   {:+.4}",
            h.h[i],
            h.h[i] - exact
        );
    }

    let spectrum = singularity_spectrum(&h)?;
    println!(
        "\nsingularity spectrum: width {:.3}, asymmetry {:+.3} (analytic width {:.3})",
        spectrum.width,
        spectrum.asymmetry,
        multifract::synth::analytic_cascade_alpha(params.p, -4.0)
            - multifract::synth::analytic_cascade_alpha(params.p, 4.0),
    );
    Ok(())
}
