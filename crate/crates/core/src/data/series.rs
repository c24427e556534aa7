use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MIN_PRICES: usize = 30;

/// Close prices with strictly increasing timestamps (Unix seconds).
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries<T> {
    timestamps: Vec<i64>,
    close: Vec<T>,
}

impl<T: Scalar> PriceSeries<T> {
    /// Sorts by timestamp, then checks for duplicates, non-positive prices
    /// and the minimum length.
    pub fn new(timestamps: Vec<i64>, close: Vec<T>) -> Result<Self> {
        if timestamps.len() != close.len() {
            return Err(Error::Data(format!(
                "{} timestamps for {} prices",
                timestamps.len(),
                close.len()
            )));
        }
        if timestamps.is_empty() {
            return Err(Error::Data("no data rows".into()));
        }
        let mut rows: Vec<(i64, T)> = timestamps.into_iter().zip(close).collect();
        rows.sort_by_key(|r| r.0);
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Data(format!("duplicate timestamp {}", w[0].0)));
            }
        }
        for (i, (_, p)) in rows.iter().enumerate() {
            if !(p.is_finite() && *p > T::zero()) {
                return Err(Error::Data(format!(
                    "price at row {i} must be positive and finite, got {p}"
                )));
            }
        }
        if rows.len() < MIN_PRICES {
            return Err(Error::Data(format!(
                "need at least {MIN_PRICES} prices, got {}",
                rows.len()
            )));
        }
        let (timestamps, close) = rows.into_iter().unzip();
        Ok(Self { timestamps, close })
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn close(&self) -> &[T] {
        &self.close
    }

    pub fn len(&self) -> usize {
        self.close.len()
    }

    pub fn is_empty(&self) -> bool {
        self.close.is_empty()
    }

    /// Reads `timestamp,close` CSV. Timestamps are Unix seconds or ISO-8601
    /// (`2024-01-31`, `2024-01-31T12:00:00`, `2024-01-31 12:00:00`, RFC 3339).
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(csv_error)?.clone();
        if headers.is_empty() {
            return Err(Error::Data("no data rows".into()));
        }
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::Parse {
                    line: 1,
                    message: format!("missing `{name}` column"),
                })
        };
        let ts_col = col("timestamp")?;
        let close_col = col("close")?;

        let mut timestamps = Vec::new();
        let mut close = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let field = |i: usize| {
                rec.get(i).ok_or_else(|| Error::Parse {
                    line,
                    message: "missing field".into(),
                })
            };
            let ts = parse_timestamp(field(ts_col)?).ok_or_else(|| Error::Parse {
                line,
                message: format!("bad timestamp `{}`", &rec[ts_col]),
            })?;
            let raw = field(close_col)?;
            let price: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad price `{raw}`"),
            })?;
            timestamps.push(ts);
            close.push(T::lit(price));
        }
        Self::new(timestamps, close)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["timestamp", "close"]).map_err(csv_error)?;
        for (t, p) in self.timestamps.iter().zip(&self.close) {
            w.write_record([t.to_string(), format!("{}", p.as_f64())])
                .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse {
            line: p.line() as usize,
            message: e.to_string(),
        },
        None => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
            other => Error::Parse {
                line: 0,
                message: format!("{other:?}"),
            },
        },
    }
}

pub fn parse_timestamp(s: &str) -> Option<i64> {
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp())
}
