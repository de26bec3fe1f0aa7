//! Tick-level trade file parsing, validation, filtering, and pool merging.
//!
//! Two input dialects are supported:
//!
//! - `generic`: header `timestamp_ms,price,volume_usd`, UTF-8, `.` decimals.
//!   This is also the canonical output format.
//! - `binance_aggtrades`: headerless aggregate-trade rows
//!   `aggTradeId,price,quantity,firstTradeId,lastTradeId,timestamp_ms,isBuyerMaker,isBestMatch`;
//!   the USD volume is `price * quantity`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dialect {
    Generic,
    BinanceAggtrades,
}

impl std::str::FromStr for Dialect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(Dialect::Generic),
            "binance_aggtrades" | "binance-aggtrades" => Ok(Dialect::BinanceAggtrades),
            other => Err(Error::InvalidArgument(format!("unknown dialect {other:?}"))),
        }
    }
}

/// One trade: epoch-millisecond timestamp, positive price, and non-negative
/// USD notional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub timestamp_ms: i64,
    pub price: f64,
    pub volume_usd: f64,
}

/// Time-ordered trades for one trading pair or pool.
#[derive(Debug, Clone)]
pub struct TickSeries {
    pub pair_id: String,
    pub records: Vec<TickRecord>,
    pub source_dialect: Dialect,
}

impl TickSeries {
    /// Builds a series from records, sorting by timestamp (stable, so rows
    /// with equal timestamps keep their input order). Rejects empty input.
    pub fn new(pair_id: String, mut records: Vec<TickRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Empty("tick series"));
        }
        records.sort_by_key(|r| r.timestamp_ms);
        Ok(TickSeries {
            pair_id,
            records,
            source_dialect: Dialect::Generic,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Summary statistics of a tick series: trade count, mean inter-trade gap in
/// seconds, and mean/max trade volume.
#[derive(Debug, Clone, Serialize)]
pub struct TickStats {
    pub n: usize,
    pub mean_gap_s: f64,
    pub mean_volume_usd: f64,
    pub max_volume_usd: f64,
}

fn validate_record(path: &str, row: usize, rec: &TickRecord) -> Result<()> {
    if rec.timestamp_ms < 0 {
        return Err(Error::BadRow {
            path: path.into(),
            row,
            detail: format!("negative timestamp {}", rec.timestamp_ms),
        });
    }
    if !(rec.price > 0.0) || !rec.price.is_finite() {
        return Err(Error::BadRow {
            path: path.into(),
            row,
            detail: format!("non-positive price {}", rec.price),
        });
    }
    if rec.volume_usd < 0.0 || !rec.volume_usd.is_finite() {
        return Err(Error::BadRow {
            path: path.into(),
            row,
            detail: format!("negative volume {}", rec.volume_usd),
        });
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(
    path: &str,
    row: usize,
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
) -> Result<T> {
    let raw = rec.get(idx).ok_or_else(|| Error::BadRow {
        path: path.into(),
        row,
        detail: format!("missing column {idx} ({name})"),
    })?;
    raw.trim().parse().map_err(|_| Error::BadRow {
        path: path.into(),
        row,
        detail: format!("cannot parse {name} from {raw:?}"),
    })
}

/// Parse a tick file in the given dialect. Rows are sorted by timestamp on
/// return; the pair id defaults to the file stem.
pub fn parse_ticks(path: &Path, dialect: Dialect) -> Result<TickSeries> {
    if !path.exists() {
        return Err(Error::MissingFile(path.display().to_string()));
    }
    let pathstr = path.display().to_string();
    let pair_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ticks".to_string());

    let mut records = Vec::new();
    match dialect {
        Dialect::Generic => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(true)
                .trim(csv::Trim::All)
                .from_path(path)?;
            let headers = rdr.headers()?.clone();
            let expected = ["timestamp_ms", "price", "volume_usd"];
            if headers.iter().collect::<Vec<_>>() != expected {
                return Err(Error::MalformedHeader {
                    path: pathstr,
                    detail: format!(
                        "expected header {:?}, found {:?}",
                        expected.join(","),
                        headers.iter().collect::<Vec<_>>().join(",")
                    ),
                });
            }
            for (i, rec) in rdr.records().enumerate() {
                let row = i + 1;
                let rec = rec?;
                let tick = TickRecord {
                    timestamp_ms: parse_field(&pathstr, row, &rec, 0, "timestamp_ms")?,
                    price: parse_field(&pathstr, row, &rec, 1, "price")?,
                    volume_usd: parse_field(&pathstr, row, &rec, 2, "volume_usd")?,
                };
                validate_record(&pathstr, row, &tick)?;
                records.push(tick);
            }
        }
        Dialect::BinanceAggtrades => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .flexible(true)
                .from_path(path)?;
            for (i, rec) in rdr.records().enumerate() {
                let row = i + 1;
                let rec = rec?;
                if row == 1 && rec.get(1).map(|v| v.parse::<f64>().is_err()) == Some(true) {
                    return Err(Error::MalformedHeader {
                        path: pathstr,
                        detail: "dialect binance_aggtrades expects headerless rows; \
                                 the first row is not numeric"
                            .into(),
                    });
                }
                if rec.len() < 6 {
                    return Err(Error::BadRow {
                        path: pathstr,
                        row,
                        detail: format!("expected 8 columns, found {}", rec.len()),
                    });
                }
                let price: f64 = parse_field(&pathstr, row, &rec, 1, "price")?;
                let quantity: f64 = parse_field(&pathstr, row, &rec, 2, "quantity")?;
                let timestamp_ms: i64 = parse_field(&pathstr, row, &rec, 5, "timestamp_ms")?;
                let tick = TickRecord {
                    timestamp_ms,
                    price,
                    volume_usd: price * quantity,
                };
                validate_record(&pathstr, row, &tick)?;
                records.push(tick);
            }
        }
    }

    let mut series = TickSeries::new(pair_id, records)?;
    series.source_dialect = dialect;
    Ok(series)
}

/// Write a tick series in the canonical generic CSV dialect.
pub fn write_ticks(ticks: &TickSeries, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_ticks_to(ticks, &mut w)
}

pub fn write_ticks_to<W: Write>(ticks: &TickSeries, w: &mut W) -> Result<()> {
    writeln!(w, "timestamp_ms,price,volume_usd")?;
    for r in &ticks.records {
        writeln!(w, "{},{},{}", r.timestamp_ms, r.price, r.volume_usd)?;
    }
    Ok(())
}

/// Keep trades with `volume_usd >= threshold_usd` (exclusion is strictly
/// below the threshold). The result may be empty.
pub fn filter_min_volume(ticks: &TickSeries, threshold_usd: f64) -> Result<TickSeries> {
    if threshold_usd < 0.0 || !threshold_usd.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "volume threshold {threshold_usd} < 0"
        )));
    }
    Ok(TickSeries {
        pair_id: ticks.pair_id.clone(),
        records: ticks
            .records
            .iter()
            .filter(|r| r.volume_usd >= threshold_usd)
            .copied()
            .collect(),
        source_dialect: ticks.source_dialect,
    })
}

/// Interleave two sorted tick series by timestamp; on ties, records from `a`
/// precede records from `b`. The merged pair id is `"<a>+<b>"`.
pub fn merge_pools(a: &TickSeries, b: &TickSeries) -> TickSeries {
    let mut records = Vec::with_capacity(a.records.len() + b.records.len());
    let mut ia = 0;
    let mut ib = 0;
    while ia < a.records.len() && ib < b.records.len() {
        if a.records[ia].timestamp_ms <= b.records[ib].timestamp_ms {
            records.push(a.records[ia]);
            ia += 1;
        } else {
            records.push(b.records[ib]);
            ib += 1;
        }
    }
    records.extend_from_slice(&a.records[ia..]);
    records.extend_from_slice(&b.records[ib..]);
    TickSeries {
        pair_id: format!("{}+{}", a.pair_id, b.pair_id),
        records,
        source_dialect: if a.source_dialect == b.source_dialect {
            a.source_dialect
        } else {
            Dialect::Generic
        },
    }
}

/// Remove exact `(timestamp, price, volume)` duplicates. Rows are reordered
/// by value within equal timestamps so identical rows become adjacent.
pub fn dedup_exact(ticks: &TickSeries) -> TickSeries {
    let mut records = ticks.records.clone();
    records.sort_by(|x, y| {
        (x.timestamp_ms, x.price, x.volume_usd)
            .partial_cmp(&(y.timestamp_ms, y.price, y.volume_usd))
            .expect("tick fields are finite")
    });
    records.dedup_by(|x, y| {
        x.timestamp_ms == y.timestamp_ms && x.price == y.price && x.volume_usd == y.volume_usd
    });
    TickSeries {
        pair_id: ticks.pair_id.clone(),
        records,
        source_dialect: ticks.source_dialect,
    }
}

/// Trade count, mean inter-trade time, and volume statistics.
pub fn tick_stats(ticks: &TickSeries) -> Result<TickStats> {
    if ticks.records.is_empty() {
        return Err(Error::Empty("tick series"));
    }
    let n = ticks.records.len();
    let mean_gap_s = if n >= 2 {
        let span = ticks.records[n - 1].timestamp_ms - ticks.records[0].timestamp_ms;
        span as f64 / 1000.0 / (n - 1) as f64
    } else {
        0.0
    };
    let total: f64 = ticks.records.iter().map(|r| r.volume_usd).sum();
    let max = ticks
        .records
        .iter()
        .map(|r| r.volume_usd)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(TickStats {
        n,
        mean_gap_s,
        mean_volume_usd: total / n as f64,
        max_volume_usd: max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rec(t: i64, p: f64, v: f64) -> TickRecord {
        TickRecord {
            timestamp_ms: t,
            price: p,
            volume_usd: v,
        }
    }

    fn write_tmp(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ticks.csv");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn parse_generic_sorted() {
        let (_d, path) = write_tmp(
            "timestamp_ms,price,volume_usd\n0,100.5,1.0\n12000,101.0,2.0\n24000,99.0,0.5\n",
        );
        let s = parse_ticks(&path, Dialect::Generic).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(
            s.records.iter().map(|r| r.timestamp_ms).collect::<Vec<_>>(),
            vec![0, 12000, 24000]
        );
    }

    #[test]
    fn parse_generic_sorts_shuffled_rows() {
        let (_d, a) = write_tmp(
            "timestamp_ms,price,volume_usd\n0,100.5,1.0\n12000,101.0,2.0\n24000,99.0,0.5\n",
        );
        let (_d2, b) = write_tmp(
            "timestamp_ms,price,volume_usd\n24000,99.0,0.5\n0,100.5,1.0\n12000,101.0,2.0\n",
        );
        let sa = parse_ticks(&a, Dialect::Generic).unwrap();
        let sb = parse_ticks(&b, Dialect::Generic).unwrap();
        assert_eq!(sa.records, sb.records);
    }

    #[test]
    fn parse_rejects_bad_price_with_row_number() {
        let (_d, path) =
            write_tmp("timestamp_ms,price,volume_usd\n0,100.0,1.0\n500,-5,1.0\n");
        match parse_ticks(&path, Dialect::Generic) {
            Err(Error::BadRow { row, detail, .. }) => {
                assert_eq!(row, 2);
                assert!(detail.contains("price"));
            }
            other => panic!("expected BadRow, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_wrong_header() {
        let (_d, path) = write_tmp("time,px,vol\n0,100.0,1.0\n");
        assert!(matches!(
            parse_ticks(&path, Dialect::Generic),
            Err(Error::MalformedHeader { .. })
        ));
    }

    #[test]
    fn parse_missing_file() {
        assert!(matches!(
            parse_ticks(Path::new("/nonexistent/x.csv"), Dialect::Generic),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn parse_binance_aggtrades() {
        let (_d, path) = write_tmp(
            "1,3000.0,0.5,10,11,1000,true,true\n2,3001.0,2.0,12,13,2000,false,true\n",
        );
        let s = parse_ticks(&path, Dialect::BinanceAggtrades).unwrap();
        assert_eq!(s.len(), 2);
        assert_relative_eq!(s.records[0].volume_usd, 1500.0);
        assert_relative_eq!(s.records[1].volume_usd, 6002.0);
        assert_eq!(s.records[0].timestamp_ms, 1000);
    }

    #[test]
    fn parse_binance_header_detected() {
        let (_d, path) = write_tmp("aggTradeId,price,quantity,f,l,ts,m,b\n1,3000.0,0.5,10,11,1000,true,true\n");
        assert!(matches!(
            parse_ticks(&path, Dialect::BinanceAggtrades),
            Err(Error::MalformedHeader { .. })
        ));
    }

    #[test]
    fn filter_threshold_is_strict_below() {
        let s = TickSeries::new(
            "p".into(),
            vec![rec(0, 1.0, 0.005), rec(1, 1.0, 0.01), rec(2, 1.0, 3.2)],
        )
        .unwrap();
        let f = filter_min_volume(&s, 0.01).unwrap();
        assert_eq!(
            f.records.iter().map(|r| r.volume_usd).collect::<Vec<_>>(),
            vec![0.01, 3.2]
        );
    }

    #[test]
    fn filter_zero_threshold_is_identity() {
        let s = TickSeries::new("p".into(), vec![rec(0, 1.0, 0.0), rec(1, 2.0, 5.0)]).unwrap();
        let f = filter_min_volume(&s, 0.0).unwrap();
        assert_eq!(f.records, s.records);
    }

    #[test]
    fn filter_can_empty_the_series() {
        let s = TickSeries::new("p".into(), vec![rec(0, 1.0, 0.001)]).unwrap();
        let f = filter_min_volume(&s, 0.01).unwrap();
        assert!(f.records.is_empty());
    }

    #[test]
    fn merge_interleaves_and_breaks_ties_left_first() {
        let a = TickSeries::new("a".into(), vec![rec(0, 1.0, 1.0), rec(20, 1.0, 2.0)]).unwrap();
        let b = TickSeries::new("b".into(), vec![rec(10, 2.0, 3.0)]).unwrap();
        let m = merge_pools(&a, &b);
        assert_eq!(
            m.records.iter().map(|r| r.timestamp_ms).collect::<Vec<_>>(),
            vec![0, 10, 20]
        );
        assert_eq!(m.pair_id, "a+b");

        let a = TickSeries::new("a".into(), vec![rec(5, 1.0, 1.0), rec(5, 1.0, 2.0)]).unwrap();
        let b = TickSeries::new("b".into(), vec![rec(5, 2.0, 3.0), rec(5, 2.0, 4.0)]).unwrap();
        let m = merge_pools(&a, &b);
        assert_eq!(
            m.records.iter().map(|r| r.price).collect::<Vec<_>>(),
            vec![1.0, 1.0, 2.0, 2.0]
        );
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let a = TickSeries::new("a".into(), vec![rec(0, 1.0, 1.0), rec(2, 1.0, 1.0)]).unwrap();
        let b = filter_min_volume(&a, 1e9).unwrap(); // empty
        let m = merge_pools(&a, &b);
        assert_eq!(m.records, a.records);
    }

    #[test]
    fn dedup_removes_exact_duplicates_only() {
        let s = TickSeries::new(
            "p".into(),
            vec![
                rec(5, 1.0, 1.0),
                rec(5, 2.0, 2.0),
                rec(5, 1.0, 1.0),
                rec(6, 1.0, 1.0),
            ],
        )
        .unwrap();
        let d = dedup_exact(&s);
        assert_eq!(d.records.len(), 3);
    }

    #[test]
    fn stats_basics() {
        let s = TickSeries::new(
            "p".into(),
            vec![rec(0, 1.0, 5.0), rec(12_000, 1.0, 5.0)],
        )
        .unwrap();
        let st = tick_stats(&s).unwrap();
        assert_eq!(st.n, 2);
        assert_relative_eq!(st.mean_gap_s, 12.0);
        assert_relative_eq!(st.mean_volume_usd, 5.0);
        assert_relative_eq!(st.max_volume_usd, 5.0);
    }

    #[test]
    fn canonical_csv_roundtrips_bit_exactly() {
        let s = TickSeries::new(
            "p".into(),
            vec![
                rec(0, 100.125, 1.0),
                rec(12_000, 0.1, 0.3333333333333333),
                rec(24_000, 99.0, 12345.6789),
            ],
        )
        .unwrap();
        let mut buf1 = Vec::new();
        write_ticks_to(&s, &mut buf1).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(&path, &buf1).unwrap();
        let back = parse_ticks(&path, Dialect::Generic).unwrap();
        let mut buf2 = Vec::new();
        write_ticks_to(&back, &mut buf2).unwrap();
        assert_eq!(buf1, buf2);
        assert_eq!(back.records, s.records);
    }

    proptest! {
        #[test]
        fn filter_is_idempotent(vols in proptest::collection::vec(0.0f64..10.0, 1..50), thr in 0.0f64..5.0) {
            let recs: Vec<TickRecord> = vols.iter().enumerate().map(|(i, &v)| rec(i as i64, 1.0, v)).collect();
            let s = TickSeries::new("p".into(), recs).unwrap();
            let once = filter_min_volume(&s, thr).unwrap();
            let twice = filter_min_volume(&once, thr).unwrap();
            prop_assert_eq!(once.records, twice.records);
        }

        #[test]
        fn merge_preserves_length_and_order(ta in proptest::collection::vec(0i64..1000, 1..40), tb in proptest::collection::vec(0i64..1000, 1..40)) {
            let a = TickSeries::new("a".into(), ta.iter().map(|&t| rec(t, 1.0, 1.0)).collect()).unwrap();
            let b = TickSeries::new("b".into(), tb.iter().map(|&t| rec(t, 2.0, 1.0)).collect()).unwrap();
            let m = merge_pools(&a, &b);
            prop_assert_eq!(m.records.len(), a.records.len() + b.records.len());
            prop_assert!(m.records.windows(2).all(|w| w[0].timestamp_ms <= w[1].timestamp_ms));
        }
    }
}
