//! Calendar dates as real-valued days since 1970-01-01.
//!
//! Event times are kept continuous; sub-day granularity is honored when the
//! input carries a timestamp.

use chrono::{NaiveDate, NaiveDateTime};

use crate::error::{Error, Result};

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Parse an ISO-8601 date (`YYYY-MM-DD`) or timestamp
/// (`YYYY-MM-DDTHH:MM:SS[.fff]`) into fractional days since the epoch.
pub fn parse_day(text: &str) -> Result<f64> {
    let s = text.trim();
    if let Ok(date) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(day_number(date) as f64);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(datetime_to_day(dt));
        }
    }
    Err(Error::invalid_input(format!("unparseable date: {s:?}")))
}

/// Whole days since 1970-01-01 for a calendar date.
pub fn day_number(date: NaiveDate) -> i64 {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch");
    date.signed_duration_since(epoch).num_days()
}

fn datetime_to_day(dt: NaiveDateTime) -> f64 {
    let date_part = day_number(dt.date()) as f64;
    let secs = dt.time().signed_duration_since(chrono::NaiveTime::MIN);
    date_part + secs.num_milliseconds() as f64 / 1_000.0 / SECONDS_PER_DAY
}

/// Convenience for literals used in priors and defaults.
pub fn day_of(year: i32, month: u32, day: u32) -> f64 {
    let date = NaiveDate::from_ymd_opt(year, month, day)
        .unwrap_or_else(|| panic!("invalid date {year}-{month}-{day}"));
    day_number(date) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn epoch_arithmetic() {
        assert_eq!(parse_day("1970-01-01").unwrap(), 0.0);
        assert_eq!(parse_day("1970-01-02").unwrap(), 1.0);
        assert_eq!(parse_day("2011-01-01").unwrap(), 14975.0);
        assert_eq!(parse_day("2015-02-12").unwrap(), 16478.0);
        assert_eq!(parse_day("2024-07-26").unwrap(), 19930.0);
        assert_eq!(parse_day("2020-09-01").unwrap(), 18506.0);
    }

    #[test]
    fn timestamps_give_fractional_days() {
        assert_abs_diff_eq!(
            parse_day("1970-01-01T12:00:00").unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            parse_day("2020-09-01 06:00:00").unwrap(),
            18506.25,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_day("not-a-date").is_err());
        assert!(parse_day("2020-13-40").is_err());
        assert!(parse_day("").is_err());
    }

    #[test]
    fn day_of_matches_parse() {
        assert_eq!(day_of(1990, 1, 1), 7305.0);
        assert_eq!(day_of(2030, 1, 1), 21915.0);
    }
}
