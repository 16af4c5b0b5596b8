use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use super::codec::{bucket_code, put_varint, HEADER_LEN, MAGIC, VERSION};
use super::{
    DistPoint, DistRecord, Family, FreqRecord, SegmentInfo, SentPoint, SentRecord, SeriesRecord, StoreManifest,
    TopicPoint, TopicRecord, KEYS_FILE, MANIFEST_FILE,
};
use crate::bucket::TimeBucket;
use crate::embed::DistanceSeries;
use crate::error::{Error, Result};
use crate::freq::FrequencyTable;
use crate::scores::{ScoreTables, TOPIC_COUNT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestMeta {
    pub corpus_id: String,
    pub config_fingerprint: String,
    pub built_at: String,
}

/// Collects records in memory and writes a complete store in one go.
#[derive(Debug, Clone)]
pub struct StoreBuilder {
    buckets: Vec<TimeBucket>,
    bucket_totals: Vec<u64>,
    records: BTreeMap<String, [Option<SeriesRecord>; 4]>,
}

fn check_sparse(buckets: impl Iterator<Item = u32>, len: usize) -> Result<()> {
    let mut prev: Option<u32> = None;
    for b in buckets {
        if b as usize >= len || prev.is_some_and(|p| p >= b) {
            return Err(Error::Domain("sparse bucket indices must be increasing and in range".into()));
        }
        prev = Some(b);
    }
    Ok(())
}

fn unit(x: f32) -> bool {
    (0.0..=1.0).contains(&x)
}

impl StoreBuilder {
    pub fn new(buckets: Vec<TimeBucket>) -> Result<Self> {
        if buckets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("store buckets must be strictly increasing".into()));
        }
        let n = buckets.len();
        Ok(StoreBuilder {
            buckets,
            bucket_totals: vec![0; n],
            records: BTreeMap::new(),
        })
    }

    pub fn buckets(&self) -> &[TimeBucket] {
        &self.buckets
    }

    pub fn bucket_index(&self, b: TimeBucket) -> Option<u32> {
        self.buckets.binary_search(&b).ok().map(|i| i as u32)
    }

    /// Unigram token totals per bucket, the per-million denominators.
    pub fn set_bucket_totals(&mut self, totals: Vec<u64>) -> Result<()> {
        if totals.len() != self.buckets.len() {
            return Err(Error::Domain("bucket totals length differs from the bucket list".into()));
        }
        self.bucket_totals = totals;
        Ok(())
    }

    pub fn put(&mut self, key: &str, record: SeriesRecord) -> Result<()> {
        let nb = self.buckets.len();
        let bad = |m: &str| Err(Error::Domain(format!("{key:?}: {m}")));
        match &record {
            SeriesRecord::Freq(r) => {
                if r.counts.len() != nb {
                    return bad("frequency record length differs from the bucket list");
                }
                if r.counts.iter().zip(&self.bucket_totals).any(|(&c, &t)| c > 0 && t == 0) {
                    return bad("count in a bucket without a token total");
                }
            }
            SeriesRecord::Dist(r) => {
                check_sparse(r.points.iter().map(|p| p.bucket), nb)?;
                if r.anchor.is_some_and(|a| a as usize >= nb) {
                    return bad("anchor out of range");
                }
                if !r.points.iter().all(|p| (0.0..=2.0).contains(&p.distance)) {
                    return bad("distance outside [0, 2]");
                }
            }
            SeriesRecord::Sent(r) => {
                check_sparse(r.points.iter().map(|p| p.bucket), nb)?;
                let ok = r.points.iter().all(|p| {
                    [p.negative, p.neutral, p.positive, p.positive_fraction].into_iter().all(unit) && p.n_sampled > 0
                });
                if !ok {
                    return bad("sentiment point out of range");
                }
            }
            SeriesRecord::Topic(r) => {
                check_sparse(r.points.iter().map(|p| p.bucket), nb)?;
                if r.top4.iter().any(|&t| t as usize >= TOPIC_COUNT)
                    || r.top4.iter().collect::<BTreeSet<_>>().len() != 4
                {
                    return bad("top-4 topics must be distinct topic indices");
                }
                if !r.points.iter().all(|p| p.means.iter().copied().all(unit) && p.n_sampled > 0) {
                    return bad("topic point out of range");
                }
            }
        }
        let slot = record.family() as usize;
        self.records.entry(key.to_string()).or_default()[slot] = Some(record);
        Ok(())
    }

    /// Build from pipeline outputs. The bucket axis is the union of every
    /// bucket any family mentions; floats are narrowed to f32.
    pub fn from_series(
        freq: &FrequencyTable,
        dist: &BTreeMap<String, DistanceSeries>,
        scores: &ScoreTables,
    ) -> Result<Self> {
        let mut axis: BTreeSet<TimeBucket> = freq.totals.keys().copied().collect();
        for s in dist.values() {
            axis.extend(s.anchor);
            axis.extend(s.points.keys().copied());
        }
        for s in scores.sentiment.values() {
            axis.extend(s.points.keys().copied());
        }
        for s in scores.topics.values() {
            axis.extend(s.points.keys().copied());
        }
        let mut b = StoreBuilder::new(axis.into_iter().collect())?;
        let totals = b.buckets.iter().map(|x| freq.totals.get(x).copied().unwrap_or(0)).collect();
        b.set_bucket_totals(totals)?;
        let idx = |b: &StoreBuilder, x: &TimeBucket| b.bucket_index(*x).expect("bucket on axis");

        let mut counts: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
        for (bucket, per_key) in &freq.counts {
            let i = idx(&b, bucket) as usize;
            for (key, &c) in per_key {
                counts.entry(key).or_insert_with(|| vec![0; b.buckets.len()])[i] = c;
            }
        }
        for (key, counts) in counts {
            b.put(key, SeriesRecord::Freq(FreqRecord { counts }))?;
        }
        for s in dist.values().filter(|s| !s.points.is_empty()) {
            let rec = DistRecord {
                anchor: s.anchor.map(|a| idx(&b, &a)),
                points: s
                    .points
                    .iter()
                    .map(|(x, &d)| DistPoint {
                        bucket: idx(&b, x),
                        distance: d as f32,
                    })
                    .collect(),
            };
            b.put(&s.key, SeriesRecord::Dist(rec))?;
        }
        for s in scores.sentiment.values() {
            let rec = SentRecord {
                points: s
                    .points
                    .iter()
                    .map(|(x, p)| SentPoint {
                        bucket: idx(&b, x),
                        negative: p.negative as f32,
                        neutral: p.neutral as f32,
                        positive: p.positive as f32,
                        positive_fraction: p.positive_fraction as f32,
                        n_sampled: p.n_sampled,
                    })
                    .collect(),
            };
            b.put(&s.key, SeriesRecord::Sent(rec))?;
        }
        for s in scores.topics.values() {
            let rec = TopicRecord {
                top4: s.top4().map(|t| t as u8),
                points: s
                    .points
                    .iter()
                    .map(|(x, p)| TopicPoint {
                        bucket: idx(&b, x),
                        n_sampled: p.n_sampled,
                        means: std::array::from_fn(|i| p.means[i] as f32),
                    })
                    .collect(),
            };
            b.put(&s.key, SeriesRecord::Topic(rec))?;
        }
        Ok(b)
    }

    fn header(kind: u8, buckets: usize, keys: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(kind);
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&(buckets as u32).to_le_bytes());
        out.extend_from_slice(&(keys as u32).to_le_bytes());
        out
    }

    fn key_total(slots: &[Option<SeriesRecord>; 4]) -> u64 {
        match &slots[0] {
            Some(SeriesRecord::Freq(r)) => r.counts.iter().sum(),
            _ => 0,
        }
    }

    fn keys_segment(&self) -> Vec<u8> {
        let n = self.records.len();
        let mut out = Self::header(0, self.buckets.len(), n);
        for b in &self.buckets {
            out.extend_from_slice(&bucket_code(*b).to_le_bytes());
        }
        let mut offset = 0u32;
        out.extend_from_slice(&offset.to_le_bytes());
        for key in self.records.keys() {
            offset += key.len() as u32;
            out.extend_from_slice(&offset.to_le_bytes());
        }
        let totals: Vec<u64> = self.records.values().map(Self::key_total).collect();
        for t in &totals {
            out.extend_from_slice(&t.to_le_bytes());
        }
        let mut rank: Vec<u32> = (0..n as u32).collect();
        rank.sort_by(|&a, &b| totals[b as usize].cmp(&totals[a as usize]).then(a.cmp(&b)));
        for r in rank {
            out.extend_from_slice(&r.to_le_bytes());
        }
        for key in self.records.keys() {
            out.extend_from_slice(key.as_bytes());
        }
        out
    }

    fn encode(record: &SeriesRecord, out: &mut Vec<u8>) {
        match record {
            SeriesRecord::Freq(r) => r.counts.iter().for_each(|&c| put_varint(out, c)),
            SeriesRecord::Dist(r) => {
                put_varint(out, r.anchor.map_or(0, |a| a as u64 + 1));
                put_varint(out, r.points.len() as u64);
                for p in &r.points {
                    put_varint(out, p.bucket as u64);
                    out.extend_from_slice(&p.distance.to_le_bytes());
                }
            }
            SeriesRecord::Sent(r) => {
                put_varint(out, r.points.len() as u64);
                for p in &r.points {
                    put_varint(out, p.bucket as u64);
                    for x in [p.negative, p.neutral, p.positive, p.positive_fraction] {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                    put_varint(out, p.n_sampled as u64);
                }
            }
            SeriesRecord::Topic(r) => {
                out.extend_from_slice(&r.top4);
                put_varint(out, r.points.len() as u64);
                for p in &r.points {
                    put_varint(out, p.bucket as u64);
                    put_varint(out, p.n_sampled as u64);
                    for x in p.means {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
            }
        }
    }

    fn family_segment(&self, family: Family) -> Vec<u8> {
        let n = self.records.len();
        let mut out = Self::header(family.kind(), self.buckets.len(), n);
        if family == Family::Freq {
            for t in &self.bucket_totals {
                out.extend_from_slice(&t.to_le_bytes());
            }
        }
        let mut records = Vec::new();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0u64);
        for slots in self.records.values() {
            if let Some(r) = &slots[family as usize] {
                Self::encode(r, &mut records);
            }
            offsets.push(records.len() as u64);
        }
        for o in offsets {
            out.extend_from_slice(&o.to_le_bytes());
        }
        out.extend_from_slice(&records);
        out
    }

    /// Writes all segments, then the manifest. An existing manifest in `dir`
    /// is removed first so a failed rebuild never looks complete.
    pub fn write(&self, dir: &Path, meta: &ManifestMeta) -> Result<StoreManifest> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest_path = dir.join(MANIFEST_FILE);
        if manifest_path.exists() {
            fs::remove_file(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        }
        let mut segments = BTreeMap::new();
        let mut emit = |name: &str, mut bytes: Vec<u8>| -> Result<()> {
            let crc = crc32fast::hash(&bytes);
            bytes.extend_from_slice(&crc.to_le_bytes());
            let path = dir.join(name);
            write_synced(&path, &bytes)?;
            segments.insert(
                name.trim_end_matches(".seg").to_string(),
                SegmentInfo {
                    file: name.to_string(),
                    bytes: bytes.len() as u64,
                    crc32: crc,
                },
            );
            Ok(())
        };
        emit(KEYS_FILE, self.keys_segment())?;
        for f in Family::ALL {
            emit(&f.file(), self.family_segment(f))?;
        }
        let manifest = StoreManifest {
            format_version: VERSION,
            corpus_id: meta.corpus_id.clone(),
            buckets: self.buckets.clone(),
            families: Family::ALL.to_vec(),
            vocabulary_size: self.records.len() as u64,
            built_at: meta.built_at.clone(),
            config_fingerprint: meta.config_fingerprint.clone(),
            segments,
        };
        let mut json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::parse(MANIFEST_FILE, e))?;
        json.push(b'\n');
        let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
        write_synced(&tmp, &json)?;
        fs::rename(&tmp, &manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        Ok(manifest)
    }
}

fn write_synced(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))?;
    f.sync_all().map_err(|e| Error::io(path, e))
}
