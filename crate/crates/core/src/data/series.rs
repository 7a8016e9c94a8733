use std::path::Path;

use chrono::{DateTime, NaiveDateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regularly sampled, non-negative flow series.
///
/// Timestamps are implicit: point `i` sits at `start + i * resolution`, so
/// strict monotonicity and regular spacing hold by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    start: DateTime<Utc>,
    resolution: TimeDelta,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: DateTime<Utc>, resolution: TimeDelta, values: Vec<f64>) -> Result<Self> {
        if resolution <= TimeDelta::zero() {
            return Err(Error::config("series resolution must be positive"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain(format!(
                "series value {} at index {i} is not a finite non-negative number",
                values[i]
            )));
        }
        Ok(Self {
            start,
            resolution,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn resolution(&self) -> TimeDelta {
        self.resolution
    }

    pub fn timestamp(&self, i: usize) -> DateTime<Utc> {
        self.start + self.resolution * i as i32
    }

    pub fn last_timestamp(&self) -> Option<DateTime<Utc>> {
        (!self.is_empty()).then(|| self.timestamp(self.len() - 1))
    }

    /// Points `range` as a new series.
    pub fn slice(&self, range: std::ops::Range<usize>) -> TimeSeries {
        TimeSeries {
            start: self.timestamp(range.start),
            resolution: self.resolution,
            values: self.values[range].to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapPolicy {
    #[default]
    Reject,
    Linear,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateOp {
    /// Flow counts add up.
    #[default]
    Sum,
    Mean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IngestOptions {
    pub resolution: TimeDelta,
    pub gap_policy: GapPolicy,
    /// Largest run of missing slots the linear policy will fill.
    pub max_gap: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            resolution: TimeDelta::minutes(5),
            gap_policy: GapPolicy::Reject,
            max_gap: 4,
        }
    }
}

const NAIVE_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
    "%m/%d/%Y %H:%M:%S",
];

/// Parses an ISO-8601 timestamp. Values without an offset are taken as UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    NAIVE_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|n| n.and_utc())
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Reads a `timestamp,flow` CSV into a validated series.
///
/// Rows may come in any order. Duplicate timestamps, negative or
/// non-finite values, off-grid timestamps and unfillable gaps are reported
/// with the offending file line.
pub fn ingest_csv(path: impl AsRef<Path>, opts: &IngestOptions) -> Result<TimeSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, path, opts)
}

pub(crate) fn ingest_reader<R: std::io::Read>(
    reader: R,
    path: &Path,
    opts: &IngestOptions,
) -> Result<TimeSeries> {
    let err = |line: usize, message: String| Error::Ingest {
        path: path.to_path_buf(),
        line,
        message,
    };
    if opts.resolution <= TimeDelta::zero() {
        return Err(Error::config("expected resolution must be positive"));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let header_ok = headers.len() == 2
        && headers[0].eq_ignore_ascii_case("timestamp")
        && (headers[1].eq_ignore_ascii_case("flow") || headers[1].eq_ignore_ascii_case("value"));
    if !header_ok {
        return Err(err(1, format!("expected header `timestamp,flow`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }

    let mut rows: Vec<(DateTime<Utc>, f64, usize)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(err(line, format!("expected 2 fields, found {}", record.len())));
        }
        let ts = parse_timestamp(&record[0])
            .ok_or_else(|| err(line, format!("unparseable timestamp `{}`", &record[0])))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| err(line, format!("unparseable flow value `{}`", &record[1])))?;
        if !value.is_finite() {
            return Err(err(line, format!("non-finite flow value `{}`", &record[1])));
        }
        if value < 0.0 {
            return Err(err(line, format!("negative flow value {value}")));
        }
        rows.push((ts, value, line));
    }
    if rows.is_empty() {
        return Err(err(1, "no data rows".into()));
    }
    rows.sort_by_key(|r| r.0);

    let res = opts.resolution;
    let mut values = Vec::with_capacity(rows.len());
    values.push(rows[0].1);
    for pair in rows.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let diff = cur.0 - prev.0;
        if diff.is_zero() {
            return Err(err(cur.2, format!("duplicate timestamp {}", format_timestamp(cur.0))));
        }
        let steps = diff.num_milliseconds() / res.num_milliseconds();
        if diff.num_milliseconds() % res.num_milliseconds() != 0 {
            return Err(err(
                cur.2,
                format!(
                    "timestamp {} is not on the {}-minute grid",
                    format_timestamp(cur.0),
                    res.num_minutes()
                ),
            ));
        }
        let missing = (steps - 1) as usize;
        if missing > 0 {
            match opts.gap_policy {
                GapPolicy::Reject => {
                    return Err(err(
                        cur.2,
                        format!("{missing} missing slot(s) before {}", format_timestamp(cur.0)),
                    ))
                }
                GapPolicy::Linear if missing > opts.max_gap => {
                    return Err(err(
                        cur.2,
                        format!(
                            "gap of {missing} slots before {} exceeds tolerance {}",
                            format_timestamp(cur.0),
                            opts.max_gap
                        ),
                    ))
                }
                GapPolicy::Linear => {
                    let k = steps as f64;
                    for j in 1..=missing {
                        values.push(prev.1 + (cur.1 - prev.1) * j as f64 / k);
                    }
                }
            }
        }
        values.push(cur.1);
    }
    TimeSeries::new(rows[0].0, res, values)
}

/// Combines every `factor` consecutive points into one; a trailing
/// remainder shorter than `factor` is dropped.
pub fn aggregate(series: &TimeSeries, factor: usize, op: AggregateOp) -> Result<TimeSeries> {
    if factor < 1 {
        return Err(Error::config("aggregation factor must be at least 1"));
    }
    if series.len() < factor {
        return Err(Error::config(format!(
            "series of length {} is shorter than aggregation factor {factor}",
            series.len()
        )));
    }
    let values = series
        .values
        .chunks_exact(factor)
        .map(|c| {
            let s: f64 = c.iter().sum();
            match op {
                AggregateOp::Sum => s,
                AggregateOp::Mean => s / factor as f64,
            }
        })
        .collect();
    TimeSeries::new(series.start, series.resolution * factor as i32, values)
}

/// Writes the series as a `timestamp,flow` CSV.
pub fn write_series_csv(path: impl AsRef<Path>, series: &TimeSeries) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["timestamp", "flow"])?;
    for (i, v) in series.values.iter().enumerate() {
        w.write_record([format_timestamp(series.timestamp(i)), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Sidecar written next to an ingested series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSidecar {
    pub start: String,
    pub resolution_minutes: i64,
    pub length: usize,
    pub aggregate_factor: usize,
    pub aggregate_op: AggregateOp,
}
