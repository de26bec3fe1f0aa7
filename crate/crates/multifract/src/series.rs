//! Fixed-interval series derived from tick data: log-returns, volume, and
//! volatility (absolute log-returns), plus normalization and aggregation
//! diagnostics.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TickSeries;
use crate::surrogates::SurrogateSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    LogReturn,
    Volume,
    Volatility,
}

impl std::fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SeriesKind::LogReturn => "log_return",
            SeriesKind::Volume => "volume",
            SeriesKind::Volatility => "volatility",
        };
        f.write_str(s)
    }
}

/// Evenly sampled series. `start_ms` is the start of the interval covered by
/// `values[0]` and `dt_ms` the interval length.
///
/// Volume and volatility values are non-negative as long as the series has
/// not been normalized; normalization recenters and may produce negatives.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularSeries {
    pub start_ms: i64,
    pub dt_ms: i64,
    pub kind: SeriesKind,
    pub normalized: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub surrogate: Option<SurrogateSpec>,
    pub values: Vec<f64>,
}

impl RegularSeries {
    pub fn new(start_ms: i64, dt_ms: i64, kind: SeriesKind, values: Vec<f64>) -> Result<Self> {
        if dt_ms <= 0 {
            return Err(Error::InvalidArgument(format!("dt_ms {dt_ms} <= 0")));
        }
        // A 2-bin aggregation legitimately yields a single return; analyses
        // impose their own stricter minimums.
        if values.is_empty() {
            return Err(Error::Empty("regular series"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("series values"));
        }
        if matches!(kind, SeriesKind::Volume | SeriesKind::Volatility)
            && values.iter().any(|&v| v < 0.0)
        {
            return Err(Error::NonPositive("volume/volatility values"));
        }
        Ok(RegularSeries {
            start_ms,
            dt_ms,
            kind,
            normalized: false,
            surrogate: None,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// JSON document with metadata and values.
    pub fn write_json(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Doc<'a> {
            start_ms: i64,
            dt_ms: i64,
            kind: SeriesKind,
            normalized: bool,
            length: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            surrogate: &'a Option<SurrogateSpec>,
            values: &'a [f64],
        }
        let doc = Doc {
            start_ms: self.start_ms,
            dt_ms: self.dt_ms,
            kind: self.kind,
            normalized: self.normalized,
            length: self.values.len(),
            surrogate: &self.surrogate,
            values: &self.values,
        };
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), &doc)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            start_ms: i64,
            dt_ms: i64,
            kind: SeriesKind,
            normalized: bool,
            length: usize,
            #[serde(default)]
            surrogate: Option<SurrogateSpec>,
            values: Vec<f64>,
        }
        let f = std::fs::File::open(path)
            .map_err(|_| Error::MissingFile(path.display().to_string()))?;
        let doc: Doc = serde_json::from_reader(std::io::BufReader::new(f))?;
        if doc.length != doc.values.len() {
            return Err(Error::InvalidArgument(format!(
                "{}: declared length {} != {} values",
                path.display(),
                doc.length,
                doc.values.len()
            )));
        }
        if doc.dt_ms <= 0 || doc.values.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{}: invalid series document",
                path.display()
            )));
        }
        if doc.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("series values"));
        }
        Ok(RegularSeries {
            start_ms: doc.start_ms,
            dt_ms: doc.dt_ms,
            kind: doc.kind,
            normalized: doc.normalized,
            surrogate: doc.surrogate,
            values: doc.values,
        })
    }

    /// Two-column CSV (`index,value`).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "index,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{i},{v}")?;
        }
        Ok(())
    }

    /// Values from the second column of an `index,value` CSV; metadata must
    /// be supplied by the caller.
    pub fn read_csv(path: &Path, start_ms: i64, dt_ms: i64, kind: SeriesKind) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|_| Error::MissingFile(path.display().to_string()))?;
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let v: f64 = rec
                .get(1)
                .ok_or_else(|| Error::BadRow {
                    path: path.display().to_string(),
                    row: i + 1,
                    detail: "missing value column".into(),
                })?
                .trim()
                .parse()
                .map_err(|e| Error::BadRow {
                    path: path.display().to_string(),
                    row: i + 1,
                    detail: format!("bad value: {e}"),
                })?;
            values.push(v);
        }
        RegularSeries::new(start_ms, dt_ms, kind, values)
    }
}

/// Aggregation diagnostics: bin count, fraction of zero log-returns, and the
/// mean per-bin volume.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregationReport {
    pub n_bins: usize,
    pub zero_return_fraction: f64,
    pub mean_bin_volume: f64,
}

/// Aggregate ticks into fixed `dt_ms` bins.
///
/// Bins are `[anchor + k*dt, anchor + (k+1)*dt)` with the anchor at the first
/// tick's timestamp rounded down to a whole `dt` boundary of the epoch. The
/// bin price is the last trade in the bin, carried forward through empty bins
/// (which therefore contribute zero returns); bin volume is the sum of trade
/// volumes. The first bin yields no return, so the return series is one
/// shorter than the bin count and starts one interval later.
pub fn aggregate(
    ticks: &TickSeries,
    dt_ms: i64,
) -> Result<(RegularSeries, RegularSeries, AggregationReport)> {
    if dt_ms <= 0 {
        return Err(Error::InvalidArgument(format!("dt_ms {dt_ms} <= 0")));
    }
    if ticks.records.is_empty() {
        return Err(Error::Empty("tick series"));
    }
    let t0 = ticks.records[0].timestamp_ms;
    let t_last = ticks.records.last().unwrap().timestamp_ms;
    let anchor = t0.div_euclid(dt_ms) * dt_ms;
    let n_bins = ((t_last - anchor).div_euclid(dt_ms) + 1) as usize;
    if n_bins < 2 {
        return Err(Error::TooFewBins { got: n_bins });
    }

    let mut volumes = vec![0.0f64; n_bins];
    let mut last_price: Vec<Option<f64>> = vec![None; n_bins];
    for rec in &ticks.records {
        let k = (rec.timestamp_ms - anchor).div_euclid(dt_ms) as usize;
        volumes[k] += rec.volume_usd;
        last_price[k] = Some(rec.price);
    }

    let mut prices = Vec::with_capacity(n_bins);
    let mut prev = last_price[0].expect("first bin contains the first tick");
    for lp in &last_price {
        if let Some(p) = lp {
            prev = *p;
        }
        prices.push(prev);
    }

    let returns = log_returns(&prices)?;
    let zero_returns = returns.iter().filter(|&&r| r == 0.0).count();
    let report = AggregationReport {
        n_bins,
        zero_return_fraction: zero_returns as f64 / returns.len() as f64,
        mean_bin_volume: volumes.iter().sum::<f64>() / n_bins as f64,
    };

    let ret_series = RegularSeries::new(anchor + dt_ms, dt_ms, SeriesKind::LogReturn, returns)?;
    let vol_series = RegularSeries::new(anchor, dt_ms, SeriesKind::Volume, volumes)?;
    Ok((ret_series, vol_series, report))
}

/// `out[i] = ln(prices[i+1] / prices[i])`.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::NonPositive("price"));
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// Recenter to mean 0 and rescale to unit sample (n-1) standard deviation.
pub fn normalize(series: &RegularSeries) -> Result<RegularSeries> {
    let n = series.values.len() as f64;
    let mean = series.values.iter().sum::<f64>() / n;
    let var = series
        .values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (n - 1.0);
    if !(var > 0.0) {
        return Err(Error::ZeroVariance("series to normalize"));
    }
    let sd = var.sqrt();
    let mut out = series.clone();
    out.values = series.values.iter().map(|v| (v - mean) / sd).collect();
    out.normalized = true;
    Ok(out)
}

/// Elementwise absolute value of a log-return series, yielding volatility.
pub fn absolute(series: &RegularSeries) -> Result<RegularSeries> {
    if series.kind != SeriesKind::LogReturn {
        return Err(Error::KindMismatch {
            expected: "log_return",
            got: series.kind.to_string(),
        });
    }
    let mut out = series.clone();
    out.values = series.values.iter().map(|v| v.abs()).collect();
    out.kind = SeriesKind::Volatility;
    out.normalized = false;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{TickRecord, TickSeries};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ticks(records: Vec<(i64, f64, f64)>) -> TickSeries {
        TickSeries::new(
            "test".into(),
            records
                .into_iter()
                .map(|(t, p, v)| TickRecord {
                    timestamp_ms: t,
                    price: p,
                    volume_usd: v,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn aggregate_two_bins_one_return() {
        // Second tick lands in the next 300 s bin; the single return is the
        // log price ratio and volumes accumulate per bin.
        let t = ticks(vec![(0, 100.0, 5.0), (320_000, 101.0, 7.0)]);
        let (r, v, rep) = aggregate(&t, 300_000).unwrap();
        assert_eq!(rep.n_bins, 2);
        assert_eq!(r.values.len(), 1);
        assert_relative_eq!(r.values[0], (1.01f64).ln(), epsilon = 1e-15);
        assert_eq!(v.values, vec![5.0, 7.0]);
        assert_eq!(r.start_ms, 300_000);
        assert_eq!(v.start_ms, 0);
    }

    #[test]
    fn aggregate_constant_price_all_zero_returns() {
        let recs: Vec<(i64, f64, f64)> = (0..10).map(|k| (k * 60_000, 50.0, 1.0)).collect();
        let t = ticks(recs);
        let (r, _v, rep) = aggregate(&t, 60_000).unwrap();
        assert!(r.values.iter().all(|&x| x == 0.0));
        assert_relative_eq!(rep.zero_return_fraction, 1.0);
    }

    #[test]
    fn aggregate_carries_price_through_empty_bins() {
        let t = ticks(vec![(0, 100.0, 1.0), (250, 110.0, 1.0), (900, 121.0, 2.0)]);
        let (r, v, rep) = aggregate(&t, 100).unwrap();
        // Bins: [0,100) p=100.. wait first bin holds both 0 and 250? No:
        // 250 is bin 2. Bins 0..=9; empties carry forward.
        assert_eq!(rep.n_bins, 10);
        assert_eq!(v.values[0], 1.0);
        assert_eq!(v.values[2], 1.0);
        assert_eq!(v.values[9], 2.0);
        assert_eq!(r.values.len(), 9);
        assert_relative_eq!(r.values[1], (110.0f64 / 100.0).ln());
        assert!(r.values[2..8].iter().all(|&x| x == 0.0));
        assert_relative_eq!(r.values[8], (121.0f64 / 110.0).ln());
        assert_relative_eq!(rep.zero_return_fraction, 7.0 / 9.0);
    }

    #[test]
    fn aggregate_anchor_rounds_down_to_dt_boundary() {
        let t = ticks(vec![(450, 100.0, 1.0), (650, 101.0, 1.0)]);
        let (r, v, _rep) = aggregate(&t, 300).unwrap();
        assert_eq!(v.start_ms, 300);
        assert_eq!(r.start_ms, 600);
        assert_eq!(v.values, vec![1.0, 1.0]);
    }

    #[test]
    fn aggregate_rejects_single_bin() {
        let t = ticks(vec![(0, 100.0, 1.0), (200, 101.0, 1.0)]);
        assert!(matches!(
            aggregate(&t, 300_000),
            Err(Error::TooFewBins { got: 1 })
        ));
    }

    #[test]
    fn log_returns_examples() {
        let r = log_returns(&[100.0, 105.0]).unwrap();
        assert_relative_eq!(r[0], 1.05f64.ln());
        assert_eq!(log_returns(&[50.0, 50.0, 50.0]).unwrap(), vec![0.0, 0.0]);
        let r = log_returns(&[100.0, 50.0]).unwrap();
        assert_relative_eq!(r[0], -(2f64.ln()));
        assert!(log_returns(&[100.0, -5.0]).is_err());
        assert!(log_returns(&[100.0, 0.0]).is_err());
    }

    #[test]
    fn normalize_two_points() {
        let s = RegularSeries::new(0, 1, SeriesKind::LogReturn, vec![1.0, 3.0]).unwrap();
        let n = normalize(&s).unwrap();
        let half = 0.5f64.sqrt();
        assert_relative_eq!(n.values[0], -half, epsilon = 1e-15);
        assert_relative_eq!(n.values[1], half, epsilon = 1e-15);
        assert!(n.normalized);
    }

    #[test]
    fn normalize_idempotent() {
        let s = RegularSeries::new(
            0,
            1,
            SeriesKind::LogReturn,
            vec![0.3, -1.0, 2.5, 0.1, -0.7, 1.2],
        )
        .unwrap();
        let once = normalize(&s).unwrap();
        let twice = normalize(&once).unwrap();
        for (a, b) in once.values.iter().zip(&twice.values) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_constant() {
        let s = RegularSeries::new(0, 1, SeriesKind::LogReturn, vec![2.0, 2.0, 2.0]).unwrap();
        assert!(matches!(normalize(&s), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn absolute_maps_and_retags() {
        let s =
            RegularSeries::new(0, 1, SeriesKind::LogReturn, vec![-0.2, 0.1, 0.0]).unwrap();
        let a = absolute(&s).unwrap();
        assert_eq!(a.values, vec![0.2, 0.1, 0.0]);
        assert_eq!(a.kind, SeriesKind::Volatility);
        let again = absolute(&a);
        assert!(matches!(again, Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn series_json_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let mut s =
            RegularSeries::new(12, 300, SeriesKind::Volume, vec![1.0, 0.0, 2.5]).unwrap();
        s.normalized = false;
        s.write_json(&path).unwrap();
        let back = RegularSeries::read_json(&path).unwrap();
        assert_eq!(back.values, s.values);
        assert_eq!(back.kind, SeriesKind::Volume);
        assert_eq!(back.start_ms, 12);
        assert_eq!(back.dt_ms, 300);
    }

    #[test]
    fn series_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = RegularSeries::new(0, 60, SeriesKind::LogReturn, vec![0.25, -0.5, 0.125])
            .unwrap();
        s.write_csv(&path).unwrap();
        let back = RegularSeries::read_csv(&path, 0, 60, SeriesKind::LogReturn).unwrap();
        assert_eq!(back.values, s.values);
    }

    proptest! {
        #[test]
        fn volume_conservation(recs in proptest::collection::vec((0i64..100_000, 1.0f64..100.0, 0.0f64..50.0), 2..80)) {
            let mut recs = recs;
            recs.sort_by_key(|r| r.0);
            let total: f64 = recs.iter().map(|r| r.2).sum();
            let t = ticks(recs);
            if let Ok((_r, v, _rep)) = aggregate(&t, 7_000) {
                let bins: f64 = v.values.iter().sum();
                prop_assert!((bins - total).abs() <= 1e-9 * total.max(1.0));
            }
        }

        #[test]
        fn normalize_scale_equivariant(vals in proptest::collection::vec(-50.0f64..50.0, 3..40), c in 0.01f64..100.0) {
            let base = RegularSeries::new(0, 1, SeriesKind::LogReturn, vals.clone());
            prop_assume!(base.is_ok());
            let base = base.unwrap();
            let scaled = RegularSeries::new(0, 1, SeriesKind::LogReturn, vals.iter().map(|v| c * v).collect()).unwrap();
            let a = normalize(&base);
            prop_assume!(a.is_ok());
            let a = a.unwrap();
            let b = normalize(&scaled).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn returns_count_is_bins_minus_one(recs in proptest::collection::vec((0i64..500_000, 1.0f64..10.0, 0.0f64..10.0), 2..60)) {
            let mut recs = recs;
            recs.sort_by_key(|r| r.0);
            let t = ticks(recs);
            if let Ok((r, v, rep)) = aggregate(&t, 9_000) {
                prop_assert_eq!(r.values.len(), rep.n_bins - 1);
                prop_assert_eq!(v.values.len(), rep.n_bins);
            }
        }
    }
}
