//! Time model shared by every series: one aggregated prior period followed by
//! calendar months.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Domain(format!("month {month} not in 1..=12")));
        }
        Ok(YearMonth { year, month })
    }

    pub fn of(ts: &DateTime<Utc>) -> Self {
        YearMonth {
            year: ts.year(),
            month: ts.month(),
        }
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            YearMonth {
                year: self.year + 1,
                month: 1,
            }
        } else {
            YearMonth {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    /// First instant of the month.
    pub fn start(self) -> DateTime<Utc> {
        let date = NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid year-month");
        Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).expect("midnight"))
    }

    /// Number of whole months from `self` to `other` (negative if `other` is earlier).
    pub fn months_until(self, other: YearMonth) -> i64 {
        (other.year as i64 - self.year as i64) * 12 + other.month as i64 - self.month as i64
    }

    pub fn days_in_month(self) -> u32 {
        let next = self.succ();
        (next.start() - self.start()).num_days() as u32
    }

    /// Inclusive range of months.
    pub fn range_inclusive(from: YearMonth, to: YearMonth) -> Vec<YearMonth> {
        let mut out = Vec::new();
        let mut cur = from;
        while cur <= to {
            out.push(cur);
            cur = cur.succ();
        }
        out
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| Error::parse(s, "expected YYYY-MM"))?;
        let year = y.parse().map_err(|e| Error::parse(s, e))?;
        let month = m.parse().map_err(|e| Error::parse(s, e))?;
        YearMonth::new(year, month)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The x-axis unit of every series. `Prior` sorts before every month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeBucket {
    Prior,
    Month(YearMonth),
}

impl TimeBucket {
    pub const PRIOR_LABEL: &'static str = "prior";

    pub fn month(year: i32, month: u32) -> Self {
        TimeBucket::Month(YearMonth::new(year, month).expect("valid month"))
    }

    pub fn is_prior(&self) -> bool {
        matches!(self, TimeBucket::Prior)
    }
}

impl fmt::Display for TimeBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeBucket::Prior => f.write_str(Self::PRIOR_LABEL),
            TimeBucket::Month(ym) => ym.fmt(f),
        }
    }
}

impl FromStr for TimeBucket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case(Self::PRIOR_LABEL) {
            Ok(TimeBucket::Prior)
        } else {
            s.parse().map(TimeBucket::Month)
        }
    }
}

impl Serialize for TimeBucket {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeBucket {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_precedes_months() {
        let mut v = vec![
            TimeBucket::month(2021, 3),
            TimeBucket::Prior,
            TimeBucket::month(2020, 12),
            TimeBucket::month(2020, 1),
        ];
        v.sort();
        let labels: Vec<String> = v.iter().map(|b| b.to_string()).collect();
        assert_eq!(labels, ["prior", "2020-01", "2020-12", "2021-03"]);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["prior", "2020-01", "2022-11"] {
            assert_eq!(s.parse::<TimeBucket>().unwrap().to_string(), s);
        }
        assert!("2020-13".parse::<TimeBucket>().is_err());
        assert!("garbage".parse::<TimeBucket>().is_err());
    }

    #[test]
    fn month_arithmetic() {
        let a = YearMonth::new(2019, 11).unwrap();
        assert_eq!(a.succ().succ(), YearMonth::new(2020, 1).unwrap());
        assert_eq!(a.months_until(YearMonth::new(2020, 2).unwrap()), 3);
        assert_eq!(YearMonth::new(2020, 2).unwrap().days_in_month(), 29);
        assert_eq!(
            YearMonth::range_inclusive(a, YearMonth::new(2020, 1).unwrap()).len(),
            3
        );
    }
}
