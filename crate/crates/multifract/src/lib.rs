//! Multifractal analysis toolkit for high-frequency market series.
//!
//! The crate covers the full path from raw tick data to scaling estimates:
//!
//! - [`ingest`] — parse, filter, and merge tick-level trade files;
//! - [`series`] — fixed-interval aggregation into log-return / volume series,
//!   normalization, volatility transforms;
//! - [`stats`] — autocorrelation, complementary cumulative distributions,
//!   power-law and stretched-exponential tail fits, Pearson correlation;
//! - [`detrend`] — the shared detrended-fluctuation engine (profiles,
//!   two-ended segmentation, polynomial detrending, q-order fluctuation
//!   functions for single series and pairs);
//! - [`mfdfa`] — generalized Hurst exponents h(q) and singularity spectra
//!   f(alpha) for a single series;
//! - [`mfcca`] — cross-correlation scaling lambda(q), averaged Hurst
//!   benchmarks, and the q-dependent detrended correlation coefficient
//!   rho(q,s);
//! - [`surrogates`] — shuffled and Fourier phase-randomized significance
//!   surrogates;
//! - [`synth`] — deterministic benchmark generators (binomial cascade,
//!   fractional Gaussian noise) with closed-form exponent oracles;
//! - [`fitting`] — log-log regression and scale-grid helpers;
//! - [`pipeline`] — config-driven end-to-end runs producing a manifest of
//!   machine-readable artifacts.
//!
//! See the crate examples for runnable walkthroughs of each capability, and
//! the `multifract` binary for the command-line interface.

pub mod detrend;
pub mod error;
pub mod fitting;
pub mod ingest;
pub mod mfcca;
pub mod mfdfa;
pub mod pipeline;
pub mod series;
pub mod stats;
pub mod surrogates;
pub mod synth;

pub use error::{Error, Result};
