use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};

/// Date boundaries: train is `(-inf, train_end]`, validation
/// `(train_end, val_end]`, test everything after `val_end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_end: DateTime<Utc>,
    pub val_end: DateTime<Utc>,
}

/// Number of points with timestamp `<= t`.
fn count_through(series: &TimeSeries, t: DateTime<Utc>) -> usize {
    if t < series.start() {
        return 0;
    }
    let elapsed = (t - series.start()).num_milliseconds();
    let step = series.resolution().num_milliseconds();
    ((elapsed / step) as usize + 1).min(series.len())
}

pub fn split_by_date(
    series: &TimeSeries,
    spec: &SplitSpec,
) -> Result<(TimeSeries, TimeSeries, TimeSeries)> {
    let last = series
        .last_timestamp()
        .ok_or_else(|| Error::config("cannot split an empty series"))?;
    if spec.train_end < series.start() {
        return Err(Error::config(format!(
            "split.train_end {} precedes the first timestamp {}",
            spec.train_end,
            series.start()
        )));
    }
    if spec.val_end <= spec.train_end {
        return Err(Error::config(
            "split.val_end must come after split.train_end (empty validation set)",
        ));
    }
    if spec.val_end >= last {
        return Err(Error::config(format!(
            "split.val_end {} leaves no test data (last timestamp {last})",
            spec.val_end
        )));
    }
    let a = count_through(series, spec.train_end);
    let b = count_through(series, spec.val_end);
    if b == a {
        return Err(Error::config("validation split contains no points"));
    }
    Ok((
        series.slice(0..a),
        series.slice(a..b),
        series.slice(b..series.len()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_timestamp;
    use chrono::TimeDelta;

    fn ten() -> TimeSeries {
        TimeSeries::new(
            parse_timestamp("2011-01-01T00:00:00Z").unwrap(),
            TimeDelta::minutes(15),
            (0..10).map(f64::from).collect(),
        )
        .unwrap()
    }

    fn at(s: &str) -> DateTime<Utc> {
        parse_timestamp(s).unwrap()
    }

    #[test]
    fn six_two_two() {
        let s = ten();
        let spec = SplitSpec {
            train_end: at("2011-01-01T01:15:00Z"),
            val_end: at("2011-01-01T01:45:00Z"),
        };
        let (tr, va, te) = split_by_date(&s, &spec).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (6, 2, 2));
        let joined: Vec<f64> = [tr.values(), va.values(), te.values()].concat();
        assert_eq!(joined, s.values());
        assert_eq!(va.start(), at("2011-01-01T01:30:00Z"));
    }

    #[test]
    fn boundary_errors() {
        let s = ten();
        let beyond = SplitSpec {
            train_end: at("2011-01-02T00:00:00Z"),
            val_end: at("2011-01-03T00:00:00Z"),
        };
        assert!(matches!(split_by_date(&s, &beyond), Err(Error::Config(_))));
        let same = SplitSpec {
            train_end: at("2011-01-01T01:00:00Z"),
            val_end: at("2011-01-01T01:00:00Z"),
        };
        assert!(matches!(split_by_date(&s, &same), Err(Error::Config(_))));
    }
}
