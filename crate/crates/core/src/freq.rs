//! Per-bucket absolute and per-million n-gram frequencies.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bucket::TimeBucket;
use crate::error::{Error, Result};
use crate::phrases::{count_units, Unit, Vocabulary};

pub type BucketTotals = BTreeMap<TimeBucket, u64>;

pub fn normalize(absolute: u64, total: u64) -> Result<f64> {
    if total == 0 {
        return Err(Error::Domain("per-million normalization with zero total".into()));
    }
    Ok(absolute as f64 * 1_000_000.0 / total as f64)
}

/// Count the vocabulary keys of one bucket's segmented documents. Phrase
/// occurrences also increment their components.
pub fn count_bucket<'a>(
    docs: impl IntoIterator<Item = &'a [Unit]>,
    vocab: &Vocabulary,
) -> BTreeMap<String, u64> {
    let mut counts = HashMap::new();
    for units in docs {
        count_units(units, &mut counts);
    }
    counts
        .into_iter()
        .filter(|(k, _)| vocab.contains(k))
        .collect()
}

/// Unigram tokens of a segmented document before joining: the sum of unit
/// arities (connectors and punctuation excluded).
pub fn unigram_tokens(units: &[Unit]) -> u64 {
    units.iter().map(|u| u.arity() as u64).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPoint {
    pub absolute: u64,
    pub per_million: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySeries {
    pub key: String,
    pub points: BTreeMap<TimeBucket, FrequencyPoint>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyTable {
    pub totals: BucketTotals,
    pub counts: BTreeMap<TimeBucket, BTreeMap<String, u64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    key: String,
    bucket: TimeBucket,
    absolute: u64,
    per_million: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TotalRow {
    bucket: TimeBucket,
    total: u64,
}

impl FrequencyTable {
    /// Aggregate segmented documents grouped by bucket.
    pub fn aggregate<'a>(
        docs: impl IntoIterator<Item = (TimeBucket, &'a [Unit])>,
        vocab: &Vocabulary,
    ) -> Self {
        let mut grouped: BTreeMap<TimeBucket, Vec<&'a [Unit]>> = BTreeMap::new();
        for (b, units) in docs {
            grouped.entry(b).or_default().push(units);
        }
        let mut table = FrequencyTable::default();
        for (bucket, docs) in grouped {
            let total: u64 = docs.iter().map(|u| unigram_tokens(u)).sum();
            if total == 0 {
                continue;
            }
            table.totals.insert(bucket, total);
            table.counts.insert(bucket, count_bucket(docs, vocab));
        }
        table
    }

    pub fn series(&self) -> BTreeMap<String, FrequencySeries> {
        let mut out: BTreeMap<String, FrequencySeries> = BTreeMap::new();
        for (bucket, counts) in &self.counts {
            let total = self.totals[bucket];
            for (key, &absolute) in counts {
                let point = FrequencyPoint {
                    absolute,
                    per_million: normalize(absolute, total).expect("bucket totals are positive"),
                };
                out.entry(key.clone())
                    .or_insert_with(|| FrequencySeries {
                        key: key.clone(),
                        points: BTreeMap::new(),
                    })
                    .points
                    .insert(*bucket, point);
            }
        }
        out
    }

    /// Writes `freq.csv` (key, bucket, absolute, per_million) and `totals.csv`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        let path = dir.join("freq.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::parse(path.display().to_string(), e))?;
        for s in self.series().values() {
            for (bucket, p) in &s.points {
                w.serialize(CsvRow {
                    key: s.key.clone(),
                    bucket: *bucket,
                    absolute: p.absolute,
                    per_million: p.per_million,
                })
                .map_err(|e| Error::parse(path.display().to_string(), e))?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("totals.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::parse(path.display().to_string(), e))?;
        for (bucket, total) in &self.totals {
            w.serialize(TotalRow {
                bucket: *bucket,
                total: *total,
            })
            .map_err(|e| Error::parse(path.display().to_string(), e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }

    pub fn read_csv(dir: &Path) -> Result<Self> {
        let mut table = FrequencyTable::default();
        let path = dir.join("totals.csv");
        let mut r = csv::Reader::from_path(&path).map_err(|e| Error::parse(path.display().to_string(), e))?;
        for row in r.deserialize::<TotalRow>() {
            let row = row.map_err(|e| Error::parse(path.display().to_string(), e))?;
            table.totals.insert(row.bucket, row.total);
        }
        let path = dir.join("freq.csv");
        let mut r = csv::Reader::from_path(&path).map_err(|e| Error::parse(path.display().to_string(), e))?;
        for row in r.deserialize::<CsvRow>() {
            let row = row.map_err(|e| Error::parse(path.display().to_string(), e))?;
            table.counts.entry(row.bucket).or_default().insert(row.key, row.absolute);
        }
        Ok(table)
    }
}
