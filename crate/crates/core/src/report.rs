//! Temporal distribution of documents by month, day of month, hour and
//! minute.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, Timelike};
use crate::bucket::YearMonth;
use crate::error::{Error, Result};
use crate::ingest::Document;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusReport {
    pub by_month: BTreeMap<YearMonth, u64>,
    /// Index 0 is day 1.
    pub by_day: [u64; 31],
    pub by_hour: [u64; 24],
    pub by_minute: [u64; 60],
}

pub fn corpus_report<'a>(docs: impl IntoIterator<Item = &'a Document>) -> CorpusReport {
    let mut r = CorpusReport {
        by_month: BTreeMap::new(),
        by_day: [0; 31],
        by_hour: [0; 24],
        by_minute: [0; 60],
    };
    for d in docs {
        let t = d.timestamp;
        *r.by_month.entry(YearMonth::of(&t)).or_default() += 1;
        r.by_day[t.day0() as usize] += 1;
        r.by_hour[t.hour() as usize] += 1;
        r.by_minute[t.minute() as usize] += 1;
    }
    r
}

impl CorpusReport {
    /// Writes `month.csv`, `day.csv`, `hour.csv` and `minute.csv`, each with
    /// columns `<unit>,documents`. Day, hour and minute tables list every
    /// value, zeros included.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, unit: &str, rows: Vec<(String, u64)>| -> Result<()> {
            let path = dir.join(name);
            let err = |e: csv::Error| Error::parse(path.display().to_string(), e);
            let mut w = csv::Writer::from_path(&path).map_err(err)?;
            w.write_record([unit, "documents"]).map_err(err)?;
            for (k, v) in rows {
                w.write_record([k, v.to_string()]).map_err(err)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))
        };
        write("month.csv", "month", self.by_month.iter().map(|(m, c)| (m.to_string(), *c)).collect())?;
        write("day.csv", "day", self.by_day.iter().enumerate().map(|(i, c)| ((i + 1).to_string(), *c)).collect())?;
        write("hour.csv", "hour", self.by_hour.iter().enumerate().map(|(i, c)| (i.to_string(), *c)).collect())?;
        write("minute.csv", "minute", self.by_minute.iter().enumerate().map(|(i, c)| (i.to_string(), *c)).collect())
    }
}
