//! Day-resolution calendar dates.
//!
//! Events are time-stamped at day resolution, so a date is just a count of
//! days since 1970-01-01 (proleptic Gregorian). Conversion uses the
//! days-from-civil algorithm.

use alloc::format;
use alloc::string::String;

use crate::{Error, Result};

/// A calendar date stored as days since 1970-01-01.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Day(pub i64);

impl Day {
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Result<Day> {
        if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
            return Err(Error::Data(format!("invalid date {year:04}-{month:02}-{day:02}")));
        }
        let d = days_from_civil(year, month, day);
        let (y2, m2, d2) = civil_from_days(d);
        if (y2, m2, d2) != (year, month, day) {
            return Err(Error::Data(format!("invalid date {year:04}-{month:02}-{day:02}")));
        }
        Ok(Day(d))
    }

    pub fn ymd(self) -> (i32, u32, u32) {
        civil_from_days(self.0)
    }

    /// Parses `yyyymmdd` (no separators).
    pub fn parse_compact(s: &str) -> Result<Day> {
        if s.len() != 8 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Data(format!("bad yyyymmdd date '{s}'")));
        }
        let year: i32 = s[0..4].parse().unwrap();
        let month: u32 = s[4..6].parse().unwrap();
        let day: u32 = s[6..8].parse().unwrap();
        Day::from_ymd(year, month, day)
    }

    /// Parses ISO `yyyy-mm-dd`.
    pub fn parse_iso(s: &str) -> Result<Day> {
        let mut parts = s.split('-');
        let (y, m, d) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(y), Some(m), Some(d), None) => (y, m, d),
            _ => return Err(Error::Data(format!("bad ISO date '{s}'"))),
        };
        let year: i32 = y.parse().map_err(|_| Error::Data(format!("bad ISO date '{s}'")))?;
        let month: u32 = m.parse().map_err(|_| Error::Data(format!("bad ISO date '{s}'")))?;
        let day: u32 = d.parse().map_err(|_| Error::Data(format!("bad ISO date '{s}'")))?;
        if y.len() != 4 || m.len() != 2 || d.len() != 2 {
            return Err(Error::Data(format!("bad ISO date '{s}'")));
        }
        Day::from_ymd(year, month, day)
    }

    pub fn to_iso(self) -> String {
        let (y, m, d) = self.ymd();
        format!("{y:04}-{m:02}-{d:02}")
    }
}

fn days_from_civil(y: i32, m: u32, d: u32) -> i64 {
    let y = i64::from(y) - i64::from(m <= 2);
    let era = y.div_euclid(400);
    let yoe = (y - era * 400) as u64;
    let mp = u64::from((m + 9) % 12);
    let doy = (153 * mp + 2) / 5 + u64::from(d) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe as i64 - 719_468
}

fn civil_from_days(z: i64) -> (i32, u32, u32) {
    let z = z + 719_468;
    let era = z.div_euclid(146_097);
    let doe = (z - era * 146_097) as u64;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe as i64 + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y } as i32, m, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_is_day_zero() {
        assert_eq!(Day::from_ymd(1970, 1, 1).unwrap(), Day(0));
    }

    #[test]
    fn compact_and_iso_agree() {
        let a = Day::parse_compact("19970101").unwrap();
        let b = Day::parse_iso("1997-01-01").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_iso(), "1997-01-01");
    }

    #[test]
    fn round_trips_across_leap_years() {
        for d in [-1_000_000_i64, -1, 0, 59, 60, 10_000, 2_000_000] {
            let (y, m, dd) = civil_from_days(d);
            assert_eq!(days_from_civil(y, m, dd), d);
        }
        assert!(Day::from_ymd(2000, 2, 29).is_ok());
        assert!(Day::from_ymd(1900, 2, 29).is_err());
        assert!(Day::from_ymd(1997, 13, 1).is_err());
    }
}
