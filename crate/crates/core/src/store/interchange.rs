//! CSV bundle export and import.
//!
//! Files: `manifest.json`, `totals.csv`, `freq.csv`, `distance.csv`,
//! `sentiment.csv`, `topics.csv`. Floats are written in shortest round-trip
//! form, so importing an export rebuilds an identical store.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{
    DistPoint, DistRecord, Family, FreqRecord, ManifestMeta, SentPoint, SentRecord, SeriesRecord, Store,
    StoreBuilder, StoreManifest, TopicPoint, TopicRecord, MANIFEST_FILE,
};
use crate::bucket::TimeBucket;
use crate::error::{Error, Result};
use crate::freq::normalize;
use crate::scores::{TOPIC_COUNT, TOPIC_LABELS};

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::parse(path.display().to_string(), e)
}

struct Sheet {
    path: std::path::PathBuf,
    w: csv::Writer<fs::File>,
}

impl Sheet {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Sheet> {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        w.write_record(header).map_err(|e| csv_err(&path, e))?;
        Ok(Sheet { path, w })
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        self.w.write_record(fields).map_err(|e| csv_err(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn export_csv(store: &Store, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let buckets = store.buckets();
    let label = |i: u32| buckets[i as usize].to_string();

    let mut totals = Sheet::create(dir, "totals.csv", &["bucket", "total"])?;
    for (b, t) in buckets.iter().zip(store.bucket_totals()) {
        totals.row(&[b.to_string(), t.to_string()])?;
    }
    totals.finish()?;

    let mut freq = Sheet::create(dir, "freq.csv", &["key", "bucket", "absolute", "per_million"])?;
    let mut dist = Sheet::create(dir, "distance.csv", &["key", "anchor", "bucket", "distance"])?;
    let mut sent = Sheet::create(
        dir,
        "sentiment.csv",
        &["key", "bucket", "negative", "neutral", "positive", "positive_fraction", "n_sampled"],
    )?;
    let header: Vec<&str> = ["key", "top4", "bucket", "n_sampled"].into_iter().chain(TOPIC_LABELS).collect();
    let mut topics = Sheet::create(dir, "topics.csv", &header)?;

    for i in 0..store.len() {
        let key = store.key(i).to_string();
        if let Some(SeriesRecord::Freq(r)) = store.get_at(i, Family::Freq)? {
            for (b, &c) in r.counts.iter().enumerate().filter(|(_, c)| **c > 0) {
                let pm = normalize(c, store.bucket_totals()[b])?;
                freq.row(&[key.clone(), buckets[b].to_string(), c.to_string(), pm.to_string()])?;
            }
        }
        if let Some(SeriesRecord::Dist(r)) = store.get_at(i, Family::Dist)? {
            let anchor = r.anchor.map_or_else(String::new, label);
            for p in &r.points {
                dist.row(&[key.clone(), anchor.clone(), label(p.bucket), p.distance.to_string()])?;
            }
        }
        if let Some(SeriesRecord::Sent(r)) = store.get_at(i, Family::Sent)? {
            for p in &r.points {
                sent.row(&[
                    key.clone(),
                    label(p.bucket),
                    p.negative.to_string(),
                    p.neutral.to_string(),
                    p.positive.to_string(),
                    p.positive_fraction.to_string(),
                    p.n_sampled.to_string(),
                ])?;
            }
        }
        if let Some(SeriesRecord::Topic(r)) = store.get_at(i, Family::Topic)? {
            let top4 = r.top4.map(|t| t.to_string()).join(";");
            for p in &r.points {
                let mut row = vec![key.clone(), top4.clone(), label(p.bucket), p.n_sampled.to_string()];
                row.extend(p.means.iter().map(f32::to_string));
                topics.row(&row)?;
            }
        }
    }
    freq.finish()?;
    dist.finish()?;
    sent.finish()?;
    topics.finish()?;

    let json = serde_json::to_vec_pretty(store.manifest()).map_err(|e| Error::parse(MANIFEST_FILE, e))?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, [json, b"\n".to_vec()].concat()).map_err(|e| Error::io(&path, e))
}

fn records(dir: &Path, name: &str, columns: usize) -> Result<Vec<csv::StringRecord>> {
    let path = dir.join(name);
    let mut r = csv::Reader::from_path(&path).map_err(|e| csv_err(&path, e))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(&path, e))?;
        if rec.len() != columns {
            return Err(csv_err(&path, format!("expected {columns} columns, found {}", rec.len())));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Rebuild a store builder from an exported bundle; returns it with the
/// bundle's manifest metadata.
pub fn import_csv(dir: &Path) -> Result<(StoreBuilder, ManifestMeta)> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: StoreManifest = serde_json::from_slice(&text).map_err(|e| csv_err(&path, e))?;
    let mut builder = StoreBuilder::new(manifest.buckets.clone())?;
    let nb = manifest.buckets.len();
    let index = |path: &Path, s: &str| -> Result<u32> {
        let b: TimeBucket = s.parse()?;
        builder_index(&manifest.buckets, b).ok_or_else(|| csv_err(path, format!("bucket {b} not in manifest")))
    };
    let num = |path: &Path, s: &str| s.parse::<f32>().map_err(|e| csv_err(path, e));
    let int = |path: &Path, s: &str| s.parse::<u64>().map_err(|e| csv_err(path, e));

    let p = dir.join("totals.csv");
    let mut totals = vec![0u64; nb];
    for rec in records(dir, "totals.csv", 2)? {
        totals[index(&p, &rec[0])? as usize] = int(&p, &rec[1])?;
    }
    builder.set_bucket_totals(totals)?;

    let p = dir.join("freq.csv");
    let mut freq: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for rec in records(dir, "freq.csv", 4)? {
        let b = index(&p, &rec[1])? as usize;
        freq.entry(rec[0].to_string()).or_insert_with(|| vec![0; nb])[b] = int(&p, &rec[2])?;
    }
    for (k, counts) in freq {
        builder.put(&k, SeriesRecord::Freq(FreqRecord { counts }))?;
    }

    let p = dir.join("distance.csv");
    let mut dist: BTreeMap<String, DistRecord> = BTreeMap::new();
    for rec in records(dir, "distance.csv", 4)? {
        let anchor = if rec[1].is_empty() { None } else { Some(index(&p, &rec[1])?) };
        let entry = dist.entry(rec[0].to_string()).or_insert(DistRecord {
            anchor,
            points: Vec::new(),
        });
        entry.points.push(DistPoint {
            bucket: index(&p, &rec[2])?,
            distance: num(&p, &rec[3])?,
        });
    }
    for (k, r) in dist {
        builder.put(&k, SeriesRecord::Dist(r))?;
    }

    let p = dir.join("sentiment.csv");
    let mut sent: BTreeMap<String, SentRecord> = BTreeMap::new();
    for rec in records(dir, "sentiment.csv", 7)? {
        sent.entry(rec[0].to_string())
            .or_insert(SentRecord { points: Vec::new() })
            .points
            .push(SentPoint {
                bucket: index(&p, &rec[1])?,
                negative: num(&p, &rec[2])?,
                neutral: num(&p, &rec[3])?,
                positive: num(&p, &rec[4])?,
                positive_fraction: num(&p, &rec[5])?,
                n_sampled: int(&p, &rec[6])? as u32,
            });
    }
    for (k, r) in sent {
        builder.put(&k, SeriesRecord::Sent(r))?;
    }

    let p = dir.join("topics.csv");
    let mut topics: BTreeMap<String, TopicRecord> = BTreeMap::new();
    for rec in records(dir, "topics.csv", 4 + TOPIC_COUNT)? {
        let top4: Vec<u8> = rec[1]
            .split(';')
            .map(|t| t.parse::<u8>().map_err(|e| csv_err(&p, e)))
            .collect::<Result<_>>()?;
        let top4: [u8; 4] = top4.try_into().map_err(|_| csv_err(&p, "top4 needs four indices"))?;
        let mut means = [0.0f32; TOPIC_COUNT];
        for (m, s) in means.iter_mut().zip(rec.iter().skip(4)) {
            *m = num(&p, s)?;
        }
        topics
            .entry(rec[0].to_string())
            .or_insert(TopicRecord {
                top4,
                points: Vec::new(),
            })
            .points
            .push(TopicPoint {
                bucket: index(&p, &rec[2])?,
                n_sampled: int(&p, &rec[3])? as u32,
                means,
            });
    }
    for (k, r) in topics {
        builder.put(&k, SeriesRecord::Topic(r))?;
    }

    let meta = ManifestMeta {
        corpus_id: manifest.corpus_id,
        config_fingerprint: manifest.config_fingerprint,
        built_at: manifest.built_at,
    };
    Ok((builder, meta))
}

fn builder_index(buckets: &[TimeBucket], b: TimeBucket) -> Option<u32> {
    buckets.binary_search(&b).ok().map(|i| i as u32)
}
